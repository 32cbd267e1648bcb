"""Particle population state shared by the simulation engine and event machinery."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wealthdyn.grid import DistributionSnapshot, WealthGrid, build_histogram

FEMALE, MALE = 0, 1
NO_PARTNER = -1


@dataclass
class Particles:
    """Struct-of-arrays particle population.

    Married partners reference each other symmetrically through `partner`
    (index into the arrays); NO_PARTNER marks singles. Dead particles stay in
    the arrays with alive=False so indices remain stable within a step.
    """

    wealth: np.ndarray
    age: np.ndarray
    sex: np.ndarray
    partner: np.ndarray
    alive: np.ndarray

    def __post_init__(self):
        n = len(self.wealth)
        for name in ("age", "sex", "partner", "alive"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length mismatch")

    @classmethod
    def singles(cls, wealth, age=None, sex=None, rng=None) -> "Particles":
        wealth = np.asarray(wealth, dtype=float).copy()
        n = len(wealth)
        if age is None:
            age = np.full(n, 40.0)
        if sex is None:
            if rng is None:
                sex = np.zeros(n, dtype=np.int8)
            else:
                sex = rng.integers(0, 2, size=n).astype(np.int8)
        return cls(
            wealth=wealth,
            age=np.asarray(age, dtype=float).copy(),
            sex=np.asarray(sex, dtype=np.int8).copy(),
            partner=np.full(n, NO_PARTNER, dtype=np.int64),
            alive=np.ones(n, dtype=bool),
        )

    def __len__(self) -> int:
        return len(self.wealth)

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    def live_wealth(self) -> np.ndarray:
        return self.wealth[self.alive]

    def check_partners(self) -> None:
        """Symmetry invariant: married partners reference each other."""
        idx = np.flatnonzero(self.partner != NO_PARTNER)
        back = self.partner[self.partner[idx]]
        if not np.array_equal(back, idx):
            raise AssertionError("partner links are not symmetric")

    def append(self, wealth, age, sex) -> None:
        k = len(np.atleast_1d(wealth))
        self.wealth = np.concatenate([self.wealth, np.atleast_1d(wealth).astype(float)])
        self.age = np.concatenate([self.age, np.atleast_1d(age).astype(float)])
        self.sex = np.concatenate([self.sex, np.atleast_1d(sex).astype(np.int8)])
        self.partner = np.concatenate([self.partner, np.full(k, NO_PARTNER, dtype=np.int64)])
        self.alive = np.concatenate([self.alive, np.ones(k, dtype=bool)])

    def snapshot(self, grid: WealthGrid, time: float = 0.0) -> DistributionSnapshot:
        return build_histogram(self.live_wealth(), grid, time=time)

    def copy(self) -> "Particles":
        return Particles(self.wealth.copy(), self.age.copy(), self.sex.copy(),
                         self.partner.copy(), self.alive.copy())


def sample_wealth_from_snapshot(snapshot: DistributionSnapshot, n: int,
                                rng: np.random.Generator) -> np.ndarray:
    """Draw wealth values from a binned snapshot (uniform in asinh within bins)."""
    mass = snapshot.mass
    total = mass.sum()
    if total <= 0:
        raise ValueError("empty snapshot")
    bins = rng.choice(len(mass), size=n, p=mass / total)
    edges = snapshot.grid.edges
    x = edges[bins] + rng.random(n) * snapshot.grid.bin_width
    return np.sinh(x)
