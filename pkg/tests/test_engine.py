import numpy as np
import pytest

import oracles
from mycogate import (
    ConductiveGrid,
    DivergenceError,
    FhnParams,
    FhnState,
    RULE_ABSORBING,
    RULE_NO_FLUX,
    Stimulus,
    laplacian,
    load_checkpoint,
    run,
    save_checkpoint,
    step,
)
from mycogate.probes import ActivityProbe, Electrode, TraceProbe
from conftest import random_grid, random_state


# --- laplacian ----------------------------------------------------------------


def test_laplacian_flat_field_interior_zero(full_grid_5x5):
    u = np.full((5, 5), 3.7)
    lap = laplacian(u, full_grid_5x5, dx=2.0)
    assert lap[2, 2] == 0.0


def test_laplacian_delta_field(full_grid_5x5):
    u = np.zeros((5, 5))
    u[2, 2] = 1.0
    lap = laplacian(u, full_grid_5x5, dx=2.0)
    assert lap[2, 2] == -1.0
    for r, c in ((1, 2), (3, 2), (2, 1), (2, 3)):
        assert lap[r, c] == 0.25


def test_laplacian_absorbing_two_neighbors():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 0] = mask[1, 1] = mask[1, 2] = True
    grid = ConductiveGrid.from_mask(mask)
    u = np.where(mask, 1.0, 0.0)
    lap = laplacian(u, grid, dx=2.0, rule=RULE_ABSORBING)
    assert lap[1, 1] == (2.0 - 4.0) / 4.0


def test_laplacian_no_flux_flat_is_zero_everywhere():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 0] = mask[1, 1] = mask[1, 2] = True
    grid = ConductiveGrid.from_mask(mask)
    u = np.where(mask, 1.0, 0.0)
    lap = laplacian(u, grid, dx=2.0, rule=RULE_NO_FLUX)
    assert (lap == 0.0).all()


def test_laplacian_zero_at_nonconductive(single_node_grid):
    u = np.ones((3, 3))
    lap = laplacian(u, single_node_grid, dx=2.0)
    assert lap[0, 0] == 0.0


# --- step ----------------------------------------------------------------------


def test_rest_state_is_fixed_point(full_grid_5x5):
    params = FhnParams(c2=0.095)
    state = FhnState.rest(full_grid_5x5)
    for _ in range(50):
        state = step(state, full_grid_5x5, params)
    assert (state.u == 0.0).all() and (state.v == 0.0).all()
    assert state.t == 50


def test_step_single_node_hand_value(single_node_grid):
    # One conductive node with k=0, u=0.5, v=0, absorbing rule, c2=0.095:
    # lap = -4*0.5/4 = -0.5, so
    #   u' = 0.5 + 0.015*(0.26*0.5*(0.5-0.13)*(1-0.5) + 1.0*(-0.5))
    #   v' = 0.015*(0.013*0.5)
    params = FhnParams(c2=0.095)
    state = FhnState.rest(single_node_grid)
    state.u[1, 1] = 0.5
    out = step(state, single_node_grid, params)
    expect_u = 0.5 + 0.015 * (0.26 * 0.5 * (0.5 - 0.13) * (1 - 0.5) + 1.0 * (-0.5))
    expect_v = 0.015 * (0.013 * 0.5)
    assert out.u[1, 1] == pytest.approx(expect_u, abs=1e-15)
    assert out.v[1, 1] == pytest.approx(expect_v, abs=1e-15)
    assert out.t == 1


@pytest.mark.parametrize("rule,coeff", [(RULE_ABSORBING, 4.0), (RULE_NO_FLUX, 0.0)])
def test_step_matches_single_cell_oracle(single_node_grid, rule, coeff):
    params = FhnParams(c2=0.095, laplacian_rule=rule)
    us, vs = oracles.single_cell(0.5, 0.0, 200, c2=0.095, center_coeff=coeff)
    state = FhnState.rest(single_node_grid)
    state.u[1, 1] = 0.5
    for i in range(200):
        state = step(state, single_node_grid, params)
        assert state.u[1, 1] == pytest.approx(us[i + 1], abs=1e-13)
        assert state.v[1, 1] == pytest.approx(vs[i + 1], abs=1e-13)


def test_step_applies_stimulus_window(single_node_grid):
    params = FhnParams(c2=0.095)
    stim = Stimulus(loci=np.array([[1, 1]]), amplitude=0.5, onset=2, duration=3)
    state = FhnState.rest(single_node_grid)
    values = []
    for _ in range(8):
        state = step(state, single_node_grid, params, stimuli=(stim,))
        values.append(state.u[1, 1])
    # Iterations 0 and 1 see no current; the window covers t = 2, 3, 4.
    assert values[0] == 0.0 and values[1] == 0.0
    assert values[2] > 0.0
    us, _ = oracles.single_cell(
        0.0, 0.0, 8, c2=0.095, current=lambda t: 0.5 if 2 <= t < 5 else 0.0
    )
    assert values[-1] == pytest.approx(us[-1], abs=1e-15)


def test_nonconductive_nodes_pinned_to_zero():
    rng = np.random.default_rng(11)
    grid = random_grid(rng, 12, 9)
    state = random_state(rng, grid)
    state.u += 0.5  # contaminate off-mask entries as well
    state.v += 0.1
    out = step(state, grid, FhnParams(c2=0.095))
    assert (out.u[~grid.mask] == 0.0).all()
    assert (out.v[~grid.mask] == 0.0).all()


def test_step_divergence_error_names_node_and_iteration(single_node_grid):
    params = FhnParams(c2=0.095)
    state = FhnState.rest(single_node_grid)
    state.u[1, 1] = 1e200
    with pytest.raises(DivergenceError) as info:
        s = state
        for _ in range(10):
            s = step(s, single_node_grid, params)
    assert info.value.node == (1, 1)
    assert info.value.step >= 1


# --- run: kernel path parity and contracts --------------------------------------


def test_run_matches_reference_step_bitwise():
    rng = np.random.default_rng(5)
    for trial in range(4):
        grid = random_grid(rng, 14, 11, density=0.6)
        if grid.n_conductive == 0:
            continue
        rows, cols = np.nonzero(grid.mask)
        pick = rng.integers(0, rows.size)
        stim = Stimulus(
            loci=np.array([[rows[pick], cols[pick]]]),
            amplitude=0.4, onset=3, duration=5,
        )
        rule = RULE_ABSORBING if trial % 2 == 0 else RULE_NO_FLUX
        params = FhnParams(c2=0.095, laplacian_rule=rule)
        state = random_state(rng, grid, scale=0.6)

        ref = state.copy()
        for _ in range(25):
            ref = step(ref, grid, params, stimuli=(stim,))

        res = run(grid, params, stimuli=(stim,), steps=25, initial=state.copy())
        assert np.array_equal(res.final.u, ref.u)
        assert np.array_equal(res.final.v, ref.v)
        assert res.final.t == 25


def test_run_from_rest_traces_zero(full_grid_5x5):
    probe = TraceProbe([Electrode(id=0, x=2, y=2)], cadence=1)
    res = run(full_grid_5x5, FhnParams(c2=0.095), probes=(probe,), steps=1)
    assert probe.values().shape == (1, 2)
    assert (probe.values() == 0.0).all()
    assert res.final.t == 1


def test_run_rejects_bad_args(full_grid_5x5):
    params = FhnParams(c2=0.095)
    with pytest.raises(ValueError):
        run(full_grid_5x5, params, steps=0)
    probe = ActivityProbe(cadence=0)
    with pytest.raises(ValueError):
        run(full_grid_5x5, params, probes=(probe,), steps=1)
    bad_stim = Stimulus(loci=np.array([[99, 99]]), amplitude=0.5)
    with pytest.raises(ValueError):
        run(full_grid_5x5, params, stimuli=(bad_stim,), steps=1)


def test_run_deterministic_repeat():
    rng = np.random.default_rng(9)
    grid = random_grid(rng, 20, 20, density=0.7)
    rows, cols = np.nonzero(grid.mask)
    stim = Stimulus(loci=np.array([[rows[0], cols[0]]]), amplitude=0.5,
                    onset=10, duration=30)
    params = FhnParams(c2=0.095)

    def one():
        probe = ActivityProbe(cadence=1)
        res = run(grid, params, stimuli=(stim,), probes=(probe,), steps=300)
        return res.final.u.copy(), res.final.v.copy(), list(probe.counts)

    u1, v1, a1 = one()
    u2, v2, a2 = one()
    assert np.array_equal(u1, u2) and np.array_equal(v1, v2) and a1 == a2


def test_run_divergence_error_from_kernel(single_node_grid):
    stim = Stimulus(loci=np.array([[1, 1]]), amplitude=1e308, onset=0, duration=3)
    with pytest.raises(DivergenceError) as info:
        run(single_node_grid, FhnParams(c2=0.095), stimuli=(stim,), steps=10)
    assert info.value.node == (1, 1)


def test_run_coverage_monotone_and_matches_threshold():
    rng = np.random.default_rng(21)
    grid = random_grid(rng, 16, 16, density=0.8)
    rows, cols = np.nonzero(grid.mask)
    stim = Stimulus(loci=np.array([[rows[0], cols[0]]]), amplitude=0.5,
                    onset=0, duration=50)
    res = run(grid, FhnParams(c2=0.094, laplacian_rule=RULE_NO_FLUX),
              stimuli=(stim,), steps=400)
    assert res.coverage[rows[0], cols[0]]
    assert not res.coverage[~grid.mask].any()


# --- conservation and locality ---------------------------------------------------


def test_diffusion_only_conserves_mass():
    # Pure diffusion (c1 = c2 = b = 0) on a fully conductive rectangle keeps
    # the field sum constant as long as nothing reaches the boundary; the
    # initial bump is far enough from the edges that leakage stays below
    # floating-point noise over 10^4 steps.
    n = 160
    grid = ConductiveGrid.from_mask(np.ones((n, n), dtype=bool))
    params = FhnParams(c2=0.0, c1=0.0, b=0.0)
    yy, xx = np.mgrid[0:n, 0:n]
    r2 = (yy - n / 2) ** 2 + (xx - n / 2) ** 2
    u0 = np.where(r2 <= 12**2, np.exp(-r2 / 18.0), 0.0)
    state = FhnState(u=u0, v=np.zeros((n, n)), t=0)
    total0 = float(u0.sum())
    res = run(grid, params, steps=10_000, initial=state)
    total1 = float(res.final.u.sum())
    assert abs(total1 - total0) / total0 <= 1e-9


def test_step_locality_4_neighborhood():
    rng = np.random.default_rng(31)
    params = FhnParams(c2=0.095)
    for _ in range(5):
        grid = random_grid(rng, 10, 10, density=0.8)
        rows, cols = np.nonzero(grid.mask)
        if rows.size == 0:
            continue
        state = random_state(rng, grid, scale=0.5)
        pick = rng.integers(0, rows.size)
        y, x = int(rows[pick]), int(cols[pick])
        bumped = state.copy()
        bumped.u[y, x] += 0.01
        bumped.v[y, x] += 0.01
        out0 = step(state, grid, params)
        out1 = step(bumped, grid, params)
        changed = np.argwhere((out0.u != out1.u) | (out0.v != out1.v))
        allowed = {(y, x), (y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)}
        assert {(int(r), int(c)) for r, c in changed} <= allowed


# --- monotone excitability on a cable --------------------------------------------


def test_propagating_c2_set_is_downward_closed(cable_grid):
    # Whether a standard kick propagates is monotone in c2: if some c2
    # propagates, every smaller c2 must as well. The kick spans several
    # cells because diffusion dilutes a single-node kick below threshold
    # before the slow reaction can latch on.
    outcomes = []
    c2_values = [0.090, 0.092, 0.094, 0.096, 0.098, 0.100]
    for c2 in c2_values:
        params = FhnParams(c2=c2, laplacian_rule=RULE_NO_FLUX)
        state = FhnState.rest(cable_grid)
        state.u[0, 3:13] = 1.0
        res = run(cable_grid, params, steps=45_000, initial=state)
        outcomes.append(bool(res.coverage[0, 80:].any()))
    assert any(outcomes), "kick failed to propagate for every c2"
    # down-set: no False followed by True
    first_false = next((i for i, ok in enumerate(outcomes) if not ok), len(outcomes))
    assert all(not ok for ok in outcomes[first_false:])


# --- checkpoints ------------------------------------------------------------------


def test_checkpoint_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(41)
    grid = random_grid(rng, 7, 13, density=0.5)
    state = random_state(rng, grid)
    state.t = 12345
    params = FhnParams(c2=0.0965, dt=0.015, laplacian_rule=RULE_NO_FLUX)
    path = tmp_path / "sim.ckpt"
    save_checkpoint(path, state, params)
    state2, params2 = load_checkpoint(path)
    assert np.array_equal(state.u, state2.u)
    assert np.array_equal(state.v, state2.v)
    assert state2.t == 12345
    assert params2 == params


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_params_validation():
    with pytest.raises(ValueError):
        FhnParams(c2=0.095, dt=0.0)
    with pytest.raises(ValueError):
        FhnParams(c2=0.095, a=1.5)
    with pytest.raises(ValueError):
        FhnParams(c2=-0.1)
    with pytest.raises(ValueError):
        FhnParams(c2=0.095, laplacian_rule="bogus")


def test_stimulus_validation():
    with pytest.raises(ValueError):
        Stimulus(loci=np.array([[0, 0]]), amplitude=0.0)
    with pytest.raises(ValueError):
        Stimulus(loci=np.array([[0, 0]]), amplitude=0.5, duration=0)
    stim = Stimulus(loci=np.array([[0, 0], [0, 0], [1, 1]]), amplitude=0.5)
    assert stim.loci.shape == (2, 2)
