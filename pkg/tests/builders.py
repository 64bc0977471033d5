"""Small hand-built populations shared by the tests."""

from darwinbrain.atoms import ActorAtom, GameAtom
from darwinbrain.population import Population


def const(aid, value, out, src="sensor/elbow_angle", rule="always"):
    """Linear net ignoring its sensor input and emitting ``value``."""
    return ActorAtom(aid, "FeedForwardNet", [1.0, 1.0, 0.0, 0.0, float(value)], [src], [out], rule)


def motor(aid, src, gain=1.0, key="motor/elbow_vel"):
    return ActorAtom(aid, "MotorWriter", [gain, 0.0], [src], [key])


def chain_pop(values=(0.1, 0.2, 0.3), games=None):
    """One two-atom molecule per value: constant -> motor writer."""
    atoms = []
    for i, v in enumerate(values):
        atoms.append(const(2 * i, v, f"wm/c{i}"))
        atoms.append(motor(2 * i + 1, f"wm/c{i}", 0.0))
    if games is None:
        games = [GameAtom(0, "AccumulateValue", ["|".join(f"wm/c{i}" for i in range(len(values)))])]
    return Population.from_atoms(atoms, games)
