import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from darwinbrain.atoms import (
    KINDS, ActorAtom, ArityMismatch, ForwardModelKind, GameAtom, InvalidAtom, Library,
    LibraryParseError, SHCState, WindowTooShort, check_activation, dump_library, flip_polarity,
    game_observe, hill_climb_step, mutual_info, parse_library, rename_rule, reset_trial,
    step_atom, validate_actor, validate_game,
)
from darwinbrain.workmem import Scalar, Signal, Vec, WorkingMemory


def mem(**vals):
    wm = WorkingMemory()
    for k, v in vals.items():
        key = k.replace("__", "/")
        wm.write(key, v, "env" if key.startswith("sensor/") else 99)
    return wm


def atom(kind, params, inputs, outputs, rule="present", aid=1):
    a = ActorAtom(aid, kind, list(params), list(inputs), list(outputs), rule)
    validate_actor(a)
    return a


def fm_atom(rng=None):
    rng = rng or np.random.default_rng(0)
    return atom("ForwardModel", ForwardModelKind.default_params(rng),
                ["sensor/elbow_angle", "motor/elbow_vel"], ["wm/pred"], "always")


# activation

def test_signal_rule():
    a = atom("Accumulator", [1.0], ["wm/x"], ["wm/y"], "signal:wm/go")
    assert check_activation(a, mem(wm__go=Signal(True)))
    assert not check_activation(a, mem(wm__go=Signal(False)))


def test_absent_key_makes_rule_false():
    a = atom("Accumulator", [1.0], ["wm/x"], ["wm/y"], "signal:wm/go")
    assert not check_activation(a, WorkingMemory())
    b = atom("Accumulator", [1.0], ["wm/x"], ["wm/y"], "present")
    assert not check_activation(b, WorkingMemory())
    c = atom("Accumulator", [1.0], ["wm/x"], ["wm/y"], "gt:wm/x:0.5")
    assert not check_activation(c, WorkingMemory())
    assert check_activation(c, mem(wm__x=Scalar(0.7)))


def test_always_on_initiator():
    a = fm_atom()
    assert a.is_initiator()
    assert check_activation(a, WorkingMemory())


def test_rename_rule():
    assert rename_rule("gt:wm/a:0.5", {"wm/a": "wm/b"}) == "gt:wm/b:0.5"
    assert rename_rule("signal:wm/a", {"wm/a": "wm/b"}) == "signal:wm/b"
    assert rename_rule("always", {"wm/a": "wm/b"}) == "always"


# stepping

def test_squared_error():
    a = atom("SquaredError", [0.0], ["wm/p", "wm/a"], ["wm/e"])
    _, writes = step_atom(a, mem(wm__p=Scalar(0.2), wm__a=Scalar(0.5)), None)
    assert writes[0][0] == "wm/e"
    assert writes[0][1].x == pytest.approx(0.09)


def test_forward_model_identity_init():
    a = fm_atom()
    for angle in (0.3, 0.3):
        _, writes = step_atom(a, mem(sensor__elbow_angle=Scalar(angle)), None)
        assert writes[0][1].x == pytest.approx(0.3)
    assert a.state["model"].predict([0.7, 0.0]) == pytest.approx(0.7)


def test_forward_model_learns_velocity():
    a = fm_atom(np.random.default_rng(1))
    rng = np.random.default_rng(2)
    angle, errs = 0.0, []
    wm = WorkingMemory()
    for t in range(3000):
        # the model sees the command issued since its previous observation
        wm.write("sensor/elbow_angle", Scalar(angle), "env")
        _, w = step_atom(a, wm, None)
        errs.append(abs(w[0][1].x - angle))
        cmd = float(rng.uniform(-1, 1))
        wm.write("motor/elbow_vel", Scalar(cmd), 0)
        angle = float(np.clip(angle + 0.1 * cmd, -1.0, 1.0))
    # persistence would be off by |0.1 * cmd|, about 0.05 on average
    assert np.mean(errs[-300:]) < 0.01


def test_accumulator_running_sum():
    a = atom("Accumulator", [1.0], ["wm/x"], ["wm/s"])
    outs = []
    for x in (1.0, 2.0, 3.0):
        _, w = step_atom(a, mem(wm__x=Scalar(x)), None)
        outs.append(w[0][1].x)
    assert outs == [1.0, 3.0, 6.0]


def test_motor_writer_modes():
    v = atom("MotorWriter", [2.0, 0.0], ["wm/c"], ["motor/elbow_vel"])
    assert step_atom(v, mem(wm__c=Scalar(0.25)), None)[1][0][1].x == 0.5
    s = atom("MotorWriter", [1.0, 1.0], ["wm/t", "sensor/elbow_angle"], ["motor/elbow_vel"])
    wm = mem(wm__t=Scalar(1.0))
    wm.write("sensor/elbow_angle", Scalar(0.25), "env")
    assert step_atom(s, wm, None)[1][0][1].x == 0.75


def test_absent_internal_input_is_miswiring():
    a = atom("Accumulator", [1.0], ["wm/x"], ["wm/s"], "always")
    with pytest.raises(ArityMismatch):
        step_atom(a, WorkingMemory(), None)


def test_vec_into_scalar_input_is_miswiring():
    a = atom("MotorWriter", [1.0, 0.0], ["wm/c"], ["motor/elbow_vel"])
    with pytest.raises(ArityMismatch):
        step_atom(a, mem(wm__c=Vec((1.0, 2.0))), None)


def test_terminator_signals():
    a = atom("Terminator", [], ["wm/x"], ["wm/stop"])
    assert step_atom(a, mem(wm__x=Scalar(1.0)), None)[1] == [("wm/stop", Signal(True))]


def test_invalid_atoms_rejected():
    with pytest.raises(InvalidAtom):
        atom("SquaredError", [0.0], ["wm/p"], ["wm/e"])
    with pytest.raises(InvalidAtom):
        atom("Accumulator", [1.0], ["wm/x"], ["sensor/elbow_angle"])
    with pytest.raises(InvalidAtom):
        atom("Accumulator", [math.nan], ["wm/x"], ["wm/y"])
    with pytest.raises(InvalidAtom):
        atom("Nope", [], ["wm/x"], ["wm/y"])


# hill climbing

def shc(best_reward, p_w=0.0, sigma=0.1):
    return SHCState(np.array([1.0]), np.array([0.0]), best_reward, sigma, p_w)


def test_shc_keeps_improvement():
    st_, _ = hill_climb_step(shc(1.0), 1.5, np.random.default_rng(0))
    assert st_.best[0] == 1.0 and st_.best_reward == 1.5


def test_shc_reverts_on_worse():
    rng = np.random.default_rng(0)
    st_, emit = hill_climb_step(shc(1.0), 0.5, rng)
    assert st_.best[0] == 0.0 and st_.best_reward == 1.0
    expected = 0.0 + np.random.default_rng(0).normal(0.0, 1.0, size=1)[0] * 0.1
    assert emit[0] == pytest.approx(expected)


def test_shc_zero_sigma_constant():
    a = atom("StochasticHillClimber", [0.0, 0.0, 1.0, 0.4], ["wm/r"], ["wm/p"])
    reset_trial(a)
    rng = np.random.default_rng(0)
    outs = {step_atom(a, mem(wm__r=Scalar(float(r))), rng)[1][0][1].x
            for r in rng.normal(size=50)}
    assert outs == {0.4}


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=60), st.integers(0, 1000))
def test_shc_best_is_monotone(rewards, seed):
    rng = np.random.default_rng(seed)
    s = SHCState(np.zeros(2), np.zeros(2), None, 0.1, 0.0)
    best = -math.inf
    for r in rewards:
        s, _ = hill_climb_step(s, r, rng)
        assert s.best_reward >= best
        best = s.best_reward


# mutual information

def brute_mi(m, s, bins, rm, rs):
    """Independent oracle: count joint occurrences in a dict."""
    def idx(x, lo, hi):
        return min(int((x - lo) / (hi - lo) * bins), bins - 1)
    n = len(m)
    joint, pm, ps = {}, {}, {}
    for a, b in zip(m, s):
        i, j = idx(a, *rm), idx(b, *rs)
        joint[i, j] = joint.get((i, j), 0) + 1
        pm[i] = pm.get(i, 0) + 1
        ps[j] = ps.get(j, 0) + 1
    return sum(c / n * math.log2(c * n / (pm[i] * ps[j])) for (i, j), c in joint.items())


def test_mi_copy_is_two_bits():
    m = np.repeat([0.1, 0.3, 0.6, 0.9], 25)
    assert mutual_info(m, m, 4, (0, 1), (0, 1)) == pytest.approx(2.0)
    assert brute_mi(m, m, 4, (0, 1), (0, 1)) == pytest.approx(2.0)


def test_mi_independent_is_small():
    m = np.random.default_rng(1).random(10000)
    s = np.random.default_rng(2).random(10000)
    v = mutual_info(m, s, 4, (0, 1), (0, 1))
    assert v < 0.01
    assert v == pytest.approx(brute_mi(m, s, 4, (0, 1), (0, 1)))


def test_mi_constant_sensor_is_zero():
    m = np.random.default_rng(1).random(100)
    assert mutual_info(m, np.full(100, 0.3), 8, (0, 1), (0, 1)) == 0.0


def test_mi_window_too_short():
    with pytest.raises(WindowTooShort):
        mutual_info([0.1], [0.2], 4, window=10)


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=200),
       st.integers(2, 16))
def test_mi_bounds_and_oracle(pairs, bins):
    m, s = np.array(pairs).T
    v = mutual_info(m, s, bins, (-1, 1), (-1, 1))
    assert 0.0 <= v <= math.log2(bins) + 1e-12
    assert v == pytest.approx(max(brute_mi(m, s, bins, (-1, 1), (-1, 1)), 0.0), abs=1e-9)


# games

def test_accumulate_and_negate():
    g = GameAtom(0, "AccumulateValue", ["wm/pred_err"])
    n = GameAtom(1, "NegateForMinimize", ["wm/pred_err"])
    tot_g = tot_n = 0.0
    for step, x in enumerate((0.1, 0.3)):
        wm = mem(wm__pred_err=Scalar(x))
        tot_g += game_observe(g, wm, step)[0]
        tot_n += game_observe(n, wm, step)[0]
    assert tot_g == pytest.approx(0.4)
    assert tot_n == pytest.approx(-0.4)


def test_distance_game():
    g = GameAtom(0, "DistanceBetweenKeys",
                 ["sensor/hand_x", "sensor/hand_y", "sensor/obj_x", "sensor/obj_y"])
    wm = WorkingMemory()
    for k, v in {"hand_x": 2.0, "hand_y": 0.0, "obj_x": 0.5, "obj_y": 0.5}.items():
        wm.write(f"sensor/{k}", Scalar(v), "env")
    assert game_observe(g, wm, 0)[0] == pytest.approx(-math.hypot(1.5, 0.5))
    assert game_observe(g, wm, 0)[0] == pytest.approx(-1.5811, abs=1e-4)


def test_absent_game_input_is_zero():
    g = GameAtom(0, "AccumulateValue", ["wm/dead"])
    assert game_observe(g, WorkingMemory(), 0) == (0.0, None)


def test_slot_alternatives_read_first_present():
    g = GameAtom(0, "AccumulateValue", ["wm/a|wm/b"])
    assert game_observe(g, mem(wm__b=Scalar(2.0)), 0)[0] == 2.0
    assert game_observe(g, mem(wm__a=Scalar(1.0), wm__b=Scalar(2.0)), 0)[0] == 1.0


def test_chain_output_writes():
    g = GameAtom(0, "ChainOutput", ["wm/x"], [2.0], output_key="wm/out")
    inc, write = game_observe(g, mem(wm__x=Scalar(0.5)), 0)
    assert inc == 0.0 and write == ("wm/out", Scalar(1.0))


def test_variance_over_trial_sums_squared_deviations():
    g = GameAtom(0, "VarianceOverTrial", ["wm/x"])
    xs = [0.3, 1.2, -0.4, 2.0, 0.7]
    ts, tot = {}, 0.0
    for i, x in enumerate(xs):
        tot += game_observe(g, mem(wm__x=Scalar(x)), i, ts)[0]
    assert tot == pytest.approx(np.var(xs) * len(xs))


def test_flip_polarity():
    g = GameAtom(0, "AccumulateValue", ["wm/x"])
    flip_polarity(g)
    assert g.transform == "NegateForMinimize"
    flip_polarity(g)
    assert g.transform == "MaximizeIsIdentity"
    d = GameAtom(1, "DistanceBetweenKeys", ["wm/a", "wm/b"])
    flip_polarity(d)
    assert d.params == [-1.0]


def test_game_validation():
    with pytest.raises(InvalidAtom):
        validate_game(GameAtom(0, "ChainOutput", ["wm/x"]))
    with pytest.raises(InvalidAtom):
        validate_game(GameAtom(0, "AccumulateValue", ["wm/x"], output_key="wm/y"))
    with pytest.raises(InvalidAtom):
        validate_game(GameAtom(0, "DistanceBetweenKeys", ["wm/x"]))


# mutation closure and determinism

def sample_atom(kind, rng):
    if kind == "ForwardModel":
        return fm_atom(rng)
    if kind == "SquaredError":
        return atom(kind, [0.0], ["wm/p", "wm/a"], ["wm/e"])
    if kind == "StochasticHillClimber":
        return atom(kind, [0.1, 0.05, 1.0, 0.0, 0.0], ["wm/r"], ["wm/p", "wm/q"])
    if kind == "MotorWriter":
        return atom(kind, [1.0, 0.0], ["wm/c"], ["motor/elbow_vel"])
    if kind in ("FeedForwardNet", "InverseModel"):
        from darwinbrain import nets
        return atom(kind, [2.0, 1.0, 3.0] + [0.1] * nets.mlp_size(2, 1, 3), ["wm/a", "wm/b"], ["wm/o"])
    if kind == "MutualInfo":
        return atom(kind, [16, 4, -1, 1, -1, 1], ["wm/m", "wm/s"], ["wm/mi"])
    if kind == "Accumulator":
        return atom(kind, [0.9], ["wm/x"], ["wm/s"])
    return atom(kind, [], ["wm/x"], ["wm/stop"])


@pytest.mark.parametrize("kind", sorted(KINDS))
def test_specific_mutation_closure(kind):
    rng = np.random.default_rng(0)
    a = sample_atom(kind, rng)
    for _ in range(10_000):
        a.params = a.spec.mutate(a.params, rng, 0.05)
    validate_actor(a)
    assert all(math.isfinite(p) for p in a.params)


@pytest.mark.parametrize("kind", sorted(KINDS))
def test_step_is_deterministic(kind):
    def run():
        a = sample_atom(kind, np.random.default_rng(3))
        reset_trial(a)
        rng = np.random.default_rng(4)
        out = []
        for t in range(20):
            wm = WorkingMemory()
            for k in a.inputs:
                if k.startswith("sensor/"):
                    wm.write(k, Scalar(0.01 * t), "env")
                elif k.startswith("wm/"):
                    wm.write(k, Scalar(math.sin(t + len(k))), 99)
            out.append(step_atom(a, wm, rng)[1])
        return out
    assert run() == run()


# library round trip

def test_library_round_trip():
    actors = [sample_atom(k, np.random.default_rng(0)) for k in sorted(KINDS)]
    for i, a in enumerate(actors):
        a.id = i
    games = [GameAtom(0, "AccumulateValue", ["wm/a|wm/b"], [1.0], innate=True),
             GameAtom(1, "ChainOutput", ["wm/x"], [], output_key="wm/y")]
    lib = Library({"note": "x"}, actors, games, [{"type": "extra", "v": 1}])
    text = dump_library(lib)
    assert dump_library(parse_library(text)) == text


def test_library_parse_error_has_line():
    with pytest.raises(LibraryParseError, match="line 2"):
        parse_library('{"type":"meta"}\n{nope}\n')
    with pytest.raises(LibraryParseError, match="line 1"):
        parse_library('{"type":"actor","id":0,"kind":"Nope","params":[],"inputs":["wm/a"],"outputs":["wm/b"]}\n')
