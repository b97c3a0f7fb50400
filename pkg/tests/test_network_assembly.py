import math

import numpy as np
import pytest

from damp_planner.component_models import (
    CapacitorParams,
    GridImpedanceParams,
    InverterParams,
    PiCableParams,
    RlBranchParams,
)
from damp_planner.dq_core import DqBlock
from damp_planner.network_assembly import (
    Branch,
    InvalidNetworkError,
    NetworkGraph,
    Shunt,
    SingularBranchError,
    assemble,
    assemble_grid,
    assemble_parts,
    validate,
    with_shunt,
)

W0 = 2 * math.pi * 50.0

INV = InverterParams(v_dc=750.0, l_h=2.5e-3, c_f=15e-6, i_d=50.0, i_q=0.0,
                     k_pi=10.0, k_ii=300.0, k_p_pll=6.0, k_i_pll=100.0,
                     f_s_hz=10e3, v_d0=311.0)


def single_node_graph(device) -> NetworkGraph:
    return NetworkGraph((1,), (), (Shunt(1, device),), W0)


def two_node_graph() -> NetworkGraph:
    return NetworkGraph(
        (1, 2),
        (Branch(1, 2, RlBranchParams(0.1, 1e-3), "link"),),
        (Shunt(1, CapacitorParams(10e-6), "cap"),),
        W0,
    )


# --- validation ---

def test_single_node_with_inverter_is_valid():
    assert validate(single_node_graph(INV)) == []


def test_unknown_branch_node_is_diagnosed():
    g = NetworkGraph((1, 2, 3, 4),
                     (Branch(1, 9, RlBranchParams(0.1, 1e-3), "bad-link"),),
                     (), W0)
    diags = validate(g)
    assert any("bad-link" in d and "9" in d for d in diags)


def test_disconnected_graph_is_diagnosed():
    g = NetworkGraph((1, 2, 3),
                     (Branch(1, 2, RlBranchParams(0.1, 1e-3)),),
                     (), W0)
    diags = validate(g)
    assert any("disconnected" in d for d in diags)


def test_empty_node_list_is_diagnosed():
    assert validate(NetworkGraph((), (), (), W0)) != []


def test_two_dampers_at_one_node_diagnosed():
    from damp_planner.component_models import ADParams
    ad = ADParams(v_dc=750.0, l_f_h=0.8e-3, k_pi=5.0, k_ii=100.0, xi=0.707,
                  tau_s=0.0014, beta=2.0, omega_low_rad_s=12566.36,
                  omega_c_rad_s=21991.13, gain_s=0.06, k_v=0.0, f_s_hz=40e3)
    g = NetworkGraph((1,), (), (Shunt(1, ad), Shunt(1, ad)), W0)
    assert any("damper" in d for d in validate(g))


def test_assemble_rejects_invalid_graph():
    g = NetworkGraph((), (), (), W0)
    with pytest.raises(InvalidNetworkError):
        assemble(g, 100.0)


# --- stamping ---

def test_single_shunt_matrix_equals_block():
    g = single_node_graph(CapacitorParams(10e-6))
    nod = assemble(g, 60.0)
    w = 2 * math.pi * 60.0
    expected = np.array([[1j * w * 10e-6, -W0 * 10e-6],
                         [W0 * 10e-6, 1j * w * 10e-6]])
    assert np.allclose(nod.matrix, expected, rtol=1e-14, atol=0)


def test_two_node_block_pattern():
    g = two_node_graph()
    nod = assemble(g, 60.0)
    yb = np.linalg.inv(np.array([[0.1 + 1j * 2 * math.pi * 60.0 * 1e-3, -W0 * 1e-3],
                                 [W0 * 1e-3, 0.1 + 1j * 2 * math.pi * 60.0 * 1e-3]]))
    ys = np.array([[1j * 2 * math.pi * 60.0 * 10e-6, -W0 * 10e-6],
                   [W0 * 10e-6, 1j * 2 * math.pi * 60.0 * 10e-6]])
    assert np.allclose(nod.matrix[0:2, 0:2], ys + yb, rtol=1e-12)
    assert np.allclose(nod.matrix[0:2, 2:4], -yb, rtol=1e-12)
    assert np.allclose(nod.matrix[2:4, 0:2], -yb, rtol=1e-12)
    assert np.allclose(nod.matrix[2:4, 2:4], yb, rtol=1e-12)


def test_pi_cable_branch_places_half_cap_at_both_ends():
    g = NetworkGraph((1, 2),
                     (Branch(1, 2, PiCableParams(0.2, 0.3e-3, 12e-6), "cable"),),
                     (), W0)
    nod = assemble(g, 300.0)
    w = 2 * math.pi * 300.0
    # off-diagonal blocks carry only -inv(Z); the diagonal adds jwC/2
    yb = -nod.matrix[0:2, 2:4]
    ysh = nod.matrix[0:2, 0:2] - yb
    assert ysh[0, 0] == pytest.approx(1j * w * 6e-6, rel=1e-12)
    assert np.allclose(nod.matrix[2:4, 2:4], yb + ysh, rtol=1e-12)


def test_case_fixture_first_node_block_hand_stamped(case_graph):
    # independent re-stamp of the node-1 diagonal block: grid cable R-L
    # inverse plus transformer R-L inverse, all by explicit 2x2 adjugate
    f = 203.0
    w = 2 * math.pi * f

    def inv2(m):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det

    z_cab = np.array([[0.2 + 1j * w * 0.3e-3, -W0 * 0.3e-3],
                      [W0 * 0.3e-3, 0.2 + 1j * w * 0.3e-3]])
    z_tr = np.array([[0.0032 + 1j * w * 0.0764e-3, -W0 * 0.0764e-3],
                     [W0 * 0.0764e-3, 0.0032 + 1j * w * 0.0764e-3]])
    expected = inv2(z_cab) + inv2(z_tr)

    nod = assemble(case_graph, f)
    assert nod.matrix.shape == (8, 8)
    assert np.allclose(nod.matrix[0:2, 0:2], expected, rtol=1e-12)


def test_assembly_splits_into_network_and_device_parts(case_graph):
    net, dev = assemble_parts(case_graph, 321.0)
    total = assemble(case_graph, 321.0)
    assert np.allclose(net.matrix + dev.matrix, total.matrix, rtol=0, atol=0)
    # grid shunt is passive, inverters are devices
    assert np.any(net.matrix[0:2, 0:2] != 0)
    assert np.all(dev.matrix[0:2, 0:2] == 0)
    assert np.any(dev.matrix[2:4, 2:4] != 0)


def test_passive_block_pattern_is_symmetric():
    g = NetworkGraph(
        (1, 2, 3),
        (Branch(1, 2, RlBranchParams(0.05, 0.5e-3)),
         Branch(2, 3, PiCableParams(0.2, 0.3e-3, 12e-6))),
        (Shunt(1, GridImpedanceParams(0.2, 0.3e-3)),
         Shunt(3, CapacitorParams(5e-6))),
        W0,
    )
    for f in (17.0, 203.0, 1500.0):
        nod = assemble(g, f)
        for i in range(3):
            for j in range(3):
                assert np.array_equal(nod.matrix[2*i:2*i+2, 2*j:2*j+2],
                                      nod.matrix[2*j:2*j+2, 2*i:2*i+2])


def test_purely_inductive_branch_dc_limit_raises():
    g = NetworkGraph((1, 2),
                     (Branch(1, 2, RlBranchParams(0.0, 1e-3), "choke"),),
                     (Shunt(1, CapacitorParams(1e-6)),), omega0=0.0)
    with pytest.raises(SingularBranchError, match="choke"):
        assemble(g, 1e-160)


# --- with_shunt ---

def test_with_shunt_zero_block_is_identity(case_graph):
    nod = assemble(case_graph, 100.0)
    same = with_shunt(nod, 2, DqBlock.zero())
    assert np.array_equal(nod.matrix, same.matrix)


def test_with_shunt_conductance_shifts_single_node_eigenvalues():
    g = single_node_graph(CapacitorParams(10e-6))
    nod = assemble(g, 60.0)
    lam0 = sorted(np.linalg.eigvals(nod.matrix), key=lambda z: z.imag)
    shifted = with_shunt(nod, 0, DqBlock.diagonal(0.25))
    lam1 = sorted(np.linalg.eigvals(shifted.matrix), key=lambda z: z.imag)
    assert np.allclose(np.array(lam1), np.array(lam0) + 0.25, rtol=0, atol=1e-12)


def test_with_shunt_touches_only_target_entries(case_graph):
    nod = assemble(case_graph, 500.0)
    mod = with_shunt(nod, 3, DqBlock.diagonal(0.05))  # node 4 -> rows 6,7
    delta = mod.matrix - nod.matrix
    touched = {(6, 6), (7, 7)}
    assert {tuple(ij) for ij in np.argwhere(delta != 0)} == touched
    for ij in touched:
        assert delta[ij] == pytest.approx(0.05, rel=1e-12)


def test_stamping_linearity_two_shunts_equal_with_shunt():
    cap = CapacitorParams(10e-6)
    g1 = NetworkGraph((1,), (), (Shunt(1, cap), Shunt(1, CapacitorParams(4e-6))), W0)
    g2 = NetworkGraph((1,), (), (Shunt(1, cap),), W0)
    f = 60.0
    w = 2 * math.pi * f
    extra = DqBlock(1j * w * 4e-6, -W0 * 4e-6, W0 * 4e-6, 1j * w * 4e-6)
    a = assemble(g1, f)
    b = with_shunt(assemble(g2, f), 0, extra)
    assert np.allclose(a.matrix, b.matrix, rtol=0, atol=1e-18)


def test_assemble_rejects_sweeps_beyond_sampled_control_band(case_graph):
    with pytest.raises(ValueError, match="f_s/2"):
        assemble_grid(case_graph, np.array([100.0, 5001.0]))


def test_assemble_grid_matches_single_assemblies(case_graph):
    freqs = np.array([50.0, 203.0, 1821.0])
    stack = assemble_grid(case_graph, freqs)
    assert stack.shape == (3, 8, 8)
    for k, f in enumerate(freqs):
        assert np.array_equal(stack[k], assemble(case_graph, float(f)).matrix)


def test_node_index_and_with_device(case_graph):
    assert case_graph.node_index(1) == 0
    assert case_graph.node_index(4) == 3
    with pytest.raises(KeyError):
        case_graph.node_index(99)
    g2 = case_graph.with_shunt_device(4, CapacitorParams(1e-6))
    assert len(g2.shunts) == len(case_graph.shunts) + 1
    assert len(case_graph.shunts) == 4
