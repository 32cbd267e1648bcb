"""Demography, inheritance, and marriage/divorce machinery.

Covers rate tables, the estate-tax schedule, heir simulation, copula-based
assignment of inheritances and spouses, and the estimation of per-bin
CDF-level effects of each event process.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wealthdyn import copulas
from wealthdyn.grid import DistributionSnapshot, WealthGrid, build_histogram, moving_average
from wealthdyn.population import FEMALE, MALE, NO_PARTNER, Particles

DEMOGRAPHY, INHERITANCE, MARRIAGE = "demography", "inheritance", "marriage"


@dataclass
class DemographyTables:
    """Annual rate tables indexed by (year, age, sex); lookup uses floor(age)."""

    years: np.ndarray                 # sorted integer years
    max_age: int
    mortality: np.ndarray             # (n_years, max_age + 1, 2), per year
    fertility: np.ndarray             # (n_years, max_age + 1, 2, n_orders)
    marriage_rate: np.ndarray         # (n_years, max_age + 1, 2)
    divorce_rate: np.ndarray          # (n_years, max_age + 1, 2)
    birth_rate: np.ndarray            # (n_years,), population entry rate at age 20
    endowment_values: np.ndarray      # support of the entry wealth distribution
    endowment_weights: np.ndarray

    def __post_init__(self):
        self.years = np.asarray(self.years, dtype=int)
        for name in ("mortality", "fertility", "marriage_rate", "divorce_rate"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError(f"{name} rates must lie in [0, 1]")
            setattr(self, name, arr)
        w = np.asarray(self.endowment_weights, dtype=float)
        if w.sum() <= 0:
            raise ValueError("endowment distribution must have positive mass")
        self.endowment_weights = w / w.sum()
        self.endowment_values = np.asarray(self.endowment_values, dtype=float)

    @classmethod
    def constant(cls, years, max_age: int = 110, mortality=0.0, fertility=0.0,
                 marriage_rate=0.0, divorce_rate=0.0, birth_rate=0.0,
                 endowment_values=(0.0,), endowment_weights=(1.0,),
                 n_orders: int = 1) -> "DemographyTables":
        """Tables with age- and year-constant rates (scalars or per-age arrays)."""
        years = np.asarray(list(years), dtype=int)
        ny, na = len(years), max_age + 1

        def expand(v, extra=()):
            v = np.asarray(v, dtype=float)
            shape = (ny, na, 2) + extra
            if v.shape == shape:
                return v
            if v.ndim == 1 and v.shape[0] == na:  # per-age profile
                v = v.reshape((1, na, 1) + (1,) * len(extra))
            return np.broadcast_to(v, shape).copy()

        return cls(
            years=years, max_age=max_age,
            mortality=expand(mortality),
            fertility=expand(fertility, (n_orders,)),
            marriage_rate=expand(marriage_rate),
            divorce_rate=expand(divorce_rate),
            birth_rate=np.broadcast_to(np.asarray(birth_rate, dtype=float), (ny,)).copy(),
            endowment_values=np.asarray(endowment_values, dtype=float),
            endowment_weights=np.asarray(endowment_weights, dtype=float),
        )

    def year_index(self, year: float) -> int:
        yi = int(np.floor(year))
        pos = np.searchsorted(self.years, yi)
        if pos >= len(self.years) or self.years[pos] != yi:
            raise KeyError(f"year {yi} not in demography tables")
        return int(pos)

    def age_index(self, age) -> np.ndarray:
        return np.clip(np.floor(age).astype(int), 0, self.max_age)

    def sample_endowment(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.endowment_values, size=n, p=self.endowment_weights)


@dataclass
class EstateTaxSchedule:
    """Per-year marginal-rate brackets applied to the estate above an exemption."""

    years: np.ndarray
    exemptions: np.ndarray                       # (n_years,)
    brackets: list                               # per year: [(lower, rate), ...] sorted

    def __post_init__(self):
        self.years = np.asarray(self.years, dtype=int)
        self.exemptions = np.asarray(self.exemptions, dtype=float)
        for year_brackets in self.brackets:
            lowers = [b[0] for b in year_brackets]
            if lowers != sorted(lowers):
                raise ValueError("brackets must be sorted by lower bound")
            if any(not 0.0 <= b[1] <= 1.0 for b in year_brackets):
                raise ValueError("marginal rates must lie in [0, 1]")

    @classmethod
    def constant(cls, brackets, exemption: float, years=(0,)) -> "EstateTaxSchedule":
        years = list(years)
        return cls(np.asarray(years, dtype=int), np.full(len(years), float(exemption)),
                   [list(brackets)] * len(years))

    def year_index(self, year: float) -> int:
        yi = int(np.floor(year))
        pos = np.searchsorted(self.years, yi)
        if pos >= len(self.years) or self.years[pos] != yi:
            raise KeyError(f"year {yi} not in estate tax schedule")
        return int(pos)


def estate_tax_due(estate: float, schedule: EstateTaxSchedule, year: float) -> float:
    """Tax on an estate: marginal-rate brackets over the amount above the exemption."""
    if estate < 0:
        raise ValueError("estate must be nonnegative")
    yi = schedule.year_index(year)
    taxable = estate - schedule.exemptions[yi]
    if taxable <= 0:
        return 0.0
    tax = 0.0
    brackets = schedule.brackets[yi]
    for k, (lower, rate) in enumerate(brackets):
        upper = brackets[k + 1][0] if k + 1 < len(brackets) else np.inf
        overlap = min(taxable, upper) - lower
        if overlap > 0:
            tax += rate * overlap
    return tax


@dataclass
class InheritanceModel:
    """Extensive-margin rank profile and intensive-margin rank dependence."""

    phi_coeffs: tuple                 # cubic in the within-age wealth rank
    joe_theta: float
    kendall_tau_target: float = 0.083
    age_band_years: float = 10.0

    def __post_init__(self):
        c = np.asarray(self.phi_coeffs, dtype=float)
        if c.shape != (4,):
            raise ValueError("phi_coeffs must be a cubic (4 coefficients)")
        integral = c[0] + c[1] / 2 + c[2] / 3 + c[3] / 4
        if abs(integral - 1.0) > 1e-10:
            raise ValueError("phi must integrate to 1 over [0, 1]")
        r = np.linspace(0.0, 1.0, 501)
        values = np.polyval(c[::-1], r)
        if np.min(values) < -1e-12:
            raise ValueError("phi must be nonnegative on [0, 1]")
        self.phi_coeffs = tuple(c)
        self._phi_max = float(values.max())

    @classmethod
    def flat(cls) -> "InheritanceModel":
        return cls((1.0, 0.0, 0.0, 0.0), copulas.calibrate_copula_theta(copulas.JOE, 0.083))

    @classmethod
    def from_unnormalized(cls, coeffs, joe_theta: float | None = None,
                          kendall_tau: float = 0.083) -> "InheritanceModel":
        c = np.asarray(coeffs, dtype=float)
        integral = c[0] + c[1] / 2 + c[2] / 3 + c[3] / 4
        if integral <= 0:
            raise ValueError("phi integral must be positive")
        if joe_theta is None:
            joe_theta = copulas.calibrate_copula_theta(copulas.JOE, kendall_tau)
        return cls(tuple(c / integral), joe_theta, kendall_tau)


def extensive_margin_phi(rank, model: InheritanceModel) -> np.ndarray:
    """Relative probability of receiving an inheritance at a within-age wealth rank."""
    rank = np.asarray(rank, dtype=float)
    if np.any(rank < 0) or np.any(rank > 1):
        raise ValueError("rank must lie in [0, 1]")
    return np.polyval(np.asarray(model.phi_coeffs)[::-1], rank)


@dataclass
class MarriageModel:
    """Assortative-mating dependence and the divorce wealth split."""

    frank_theta: float
    kendall_tau_target: float = 0.28
    divorce_share_values: np.ndarray = field(default_factory=lambda: np.array([0.5]))
    divorce_share_weights: np.ndarray = field(default_factory=lambda: np.array([1.0]))

    def __post_init__(self):
        if self.frank_theta != copulas.INDEPENDENT:
            implied = copulas.kendall_tau(copulas.FRANK, self.frank_theta)
            if abs(implied - self.kendall_tau_target) > 1e-6:
                raise ValueError("frank_theta does not match the Kendall tau target")
        w = np.asarray(self.divorce_share_weights, dtype=float)
        self.divorce_share_weights = w / w.sum()
        self.divorce_share_values = np.asarray(self.divorce_share_values, dtype=float)

    @classmethod
    def calibrated(cls, tau: float = 0.28, **kw) -> "MarriageModel":
        theta = copulas.calibrate_copula_theta(copulas.FRANK, tau) if tau != 0 else copulas.INDEPENDENT
        return cls(theta, tau, **kw)

    def sample_divorce_share(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.divorce_share_values, size=n, p=self.divorce_share_weights)


@dataclass
class EventEffects:
    """Per-bin, per-year CDF-level corrections from the three event processes."""

    grid: WealthGrid
    Z: np.ndarray
    Xi: np.ndarray
    X: np.ndarray

    def total(self) -> np.ndarray:
        return self.Z + self.Xi + self.X

    @classmethod
    def zeros(cls, grid: WealthGrid) -> "EventEffects":
        z = np.zeros(grid.n_bins)
        return cls(grid, z.copy(), z.copy(), z.copy())


def simulate_heirs(age_at_death: float, sex: int, death_year: float,
                   tables: DemographyTables, rng: np.random.Generator) -> list[tuple[float, int]]:
    """Living children of a decedent: (age, sex) pairs at the death year.

    Children are generated over the decedent's past lifetime from year-, age-,
    sex-, and birth-order-specific fertility, then thinned by child mortality
    up to the death year. Missing table years raise.
    """
    death_year = int(np.floor(death_year))
    age_at_death = float(age_at_death)
    n_orders = tables.fertility.shape[3]
    heirs: list[tuple[float, int]] = []
    n_children = 0
    for a in range(0, int(np.floor(age_at_death))):
        year = death_year - (int(np.floor(age_at_death)) - a)
        yi = tables.year_index(year)
        order = min(n_children, n_orders - 1)
        rate = tables.fertility[yi, min(a, tables.max_age), sex, order]
        if rng.random() >= rate:
            continue
        n_children += 1
        child_sex = int(rng.integers(0, 2))
        # survival from birth year to the death year
        alive = True
        for child_age in range(0, death_year - year):
            cyi = tables.year_index(year + child_age)
            if rng.random() < tables.mortality[cyi, min(child_age, tables.max_age), child_sex]:
                alive = False
                break
        if alive:
            heirs.append((float(death_year - year), child_sex))
    return heirs


def marriage_divorce_rates_from_stocks(never_married, married, divorced,
                                       winsorize: float = 0.10, smooth: bool = True,
                                       window_years: float = 10.0, window_ages: float = 10.0):
    """Marriage and divorce rates from marital-status population shares.

    Inputs are fractions[year, age, sex]. The marriage rate follows from the
    depletion of the never-married stock between (a, t) and (a+1, t+1); the
    divorce rate from the growth of the divorced stock net of marriages. Zero
    denominators yield NaN. Rates are then winsorized and smoothed with a
    rectangular year x age moving average unless smooth=False.
    """
    never = np.asarray(never_married, dtype=float)
    mar = np.asarray(married, dtype=float)
    div = np.asarray(divorced, dtype=float)
    for arr in (never, mar, div):
        if np.nanmin(arr) < -1e-12 or np.nanmax(arr) > 1 + 1e-12:
            raise ValueError("fractions must lie in [0, 1]")
    ny, na, _ = never.shape
    marriage = np.full((ny - 1, na - 1, 2), np.nan)
    divorce = np.full((ny - 1, na - 1, 2), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = never[1:, 1:, :]
        den = never[:-1, :-1, :]
        marriage = np.where(den > 0, 1.0 - num / den, np.nan)
        den_m = mar[:-1, :-1, :]
        divorce = np.where(
            den_m > 0,
            (div[1:, 1:, :] - (1.0 - marriage) * div[:-1, :-1, :]) / den_m,
            np.nan)

    if not smooth:
        return marriage, divorce

    def _smooth(rates):
        out = rates.copy()
        finite = out[np.isfinite(out)]
        if finite.size:
            lo, hi = np.percentile(finite, [100 * winsorize, 100 * (1 - winsorize)])
            out = np.clip(out, lo, hi)
        years = np.arange(out.shape[0], dtype=float)
        ages = np.arange(out.shape[1], dtype=float)
        for s in range(2):
            tmp = np.empty_like(out[:, :, s])
            for a in range(out.shape[1]):
                tmp[:, a] = moving_average(out[:, a, s], years, window_years)
            for y in range(out.shape[0]):
                tmp[y, :] = moving_average(tmp[y, :], ages, window_ages)
            out[:, :, s] = tmp
        return out

    return _smooth(marriage), _smooth(divorce)


def _age_bands(ages: np.ndarray, band: float) -> np.ndarray:
    return np.floor(ages / band).astype(int)


def _rank_in(value: float, sorted_pool: np.ndarray) -> float:
    if len(sorted_pool) == 0:
        return 0.5
    return float(np.searchsorted(sorted_pool, value) / len(sorted_pool))


class _BandRanks:
    """Within-age-band wealth order statistics for heir placement."""

    def __init__(self, particles: Particles, band: float):
        alive = np.flatnonzero(particles.alive)
        bands = _age_bands(particles.age[alive], band)
        self.by_band: dict[int, np.ndarray] = {}
        for b in np.unique(bands):
            members = alive[bands == b]
            order = members[np.argsort(particles.wealth[members], kind="stable")]
            self.by_band[int(b)] = order

    def pick(self, band: int, rank: float) -> int | None:
        order = self.by_band.get(band)
        if order is None or len(order) == 0:
            # fall back to the nearest populated band
            if not self.by_band:
                return None
            band = min(self.by_band, key=lambda b: abs(b - band))
            order = self.by_band[band]
        k = int(np.clip(round(rank * (len(order) - 1)), 0, len(order) - 1))
        return int(order[k])


def _heir_rank(estate_rank: float, model: InheritanceModel | None,
               rng: np.random.Generator) -> float:
    """Within-age-band wealth rank of a receiving heir.

    The intensive-margin dependence comes from the Joe-copula conditional on
    the estate's rank; the extensive-margin tilt phi reweights which ranks
    receive at all (rejection step, capped to stay O(1) per heir).
    """
    theta = max(model.joe_theta, 1.0) if model is not None else 1.0
    tilted = model is not None and any(c != 0.0 for c in model.phi_coeffs[1:])
    for _ in range(16):
        v = float(copulas.conditional_quantile(copulas.JOE, theta, estate_rank, rng.random()))
        if not tilted:
            return v
        c0, c1, c2, c3 = model.phi_coeffs
        if rng.random() * model._phi_max <= c0 + v * (c1 + v * (c2 + v * c3)):
            return v
    return v


def _check_rates(rates: np.ndarray, dt: float, what: str) -> None:
    if rates.size and np.max(rates) * dt > 1.0 + 1e-12:
        raise ValueError(f"time step too coarse for event rate ({what})")


def apply_events(particles: Particles, tables: DemographyTables,
                 estate: EstateTaxSchedule | None,
                 inherit_model: InheritanceModel | None,
                 marriage_model: MarriageModel | None,
                 year: float, dt: float, rng: np.random.Generator,
                 demography: bool = True, inheritance: bool = True,
                 marriage: bool = True, age_population: bool = True) -> dict:
    """One event step in fixed order: deaths (with bequests), births, marriages,
    divorces. Returns a log of event counts."""
    log = {"deaths": 0, "births": 0, "marriages": 0, "divorces": 0,
           "bequests": 0.0, "estate_tax": 0.0, "vanished_wealth": 0.0}
    yi = tables.year_index(year)

    if age_population and demography:
        particles.age[particles.alive] += dt

    if demography:
        alive_idx = np.flatnonzero(particles.alive)
        ages = tables.age_index(particles.age[alive_idx])
        p_death = tables.mortality[yi, ages, particles.sex[alive_idx]] * dt
        _check_rates(tables.mortality[yi], dt, "mortality")
        dying = alive_idx[rng.random(len(alive_idx)) < p_death]

        band = inherit_model.age_band_years if inherit_model is not None else 10.0
        ranks = _BandRanks(particles, band) if (inheritance and len(dying)) else None
        live_wealth_sorted = np.sort(particles.wealth[particles.alive])

        for i in dying:
            if not particles.alive[i]:
                continue  # partner died earlier in this step
            particles.alive[i] = False
            log["deaths"] += 1
            w = particles.wealth[i]
            particles.wealth[i] = 0.0
            spouse = particles.partner[i]
            if spouse != NO_PARTNER:
                particles.partner[i] = NO_PARTNER
                if particles.alive[spouse]:
                    particles.partner[spouse] = NO_PARTNER
                    particles.wealth[spouse] += w  # spousal bequest, untaxed and whole
                    continue
            if not inheritance or w <= 0:
                log["vanished_wealth"] += w
                continue
            heirs = simulate_heirs(particles.age[i], int(particles.sex[i]), year, tables, rng)
            if not heirs:
                log["vanished_wealth"] += w
                continue
            tax = estate_tax_due(w, estate, year) if estate is not None else 0.0
            log["estate_tax"] += tax
            net = w - tax
            share = net / len(heirs)
            u = _rank_in(w, live_wealth_sorted)
            for heir_age, _heir_sex in heirs:
                v = _heir_rank(u, inherit_model, rng)
                target = ranks.pick(int(heir_age // band), v) if ranks is not None else None
                if target is None:
                    log["vanished_wealth"] += share
                    continue
                particles.wealth[target] += share
                log["bequests"] += share

        # births: new particles enter at age 20 with an endowment draw
        n_alive = particles.n_alive
        beta = tables.birth_rate[yi]
        if beta > 0 and n_alive > 0:
            if beta * dt > 1:
                raise ValueError("time step too coarse for event rate (births)")
            k = rng.poisson(beta * dt * n_alive)
            if k > 0:
                particles.append(tables.sample_endowment(k, rng), np.full(k, 20.0),
                                 rng.integers(0, 2, k).astype(np.int8))
                log["births"] = int(k)

    if marriage and marriage_model is not None:
        _check_rates(tables.marriage_rate[yi], dt, "marriage")
        _check_rates(tables.divorce_rate[yi], dt, "divorce")
        alive_idx = np.flatnonzero(particles.alive)
        single = alive_idx[particles.partner[alive_idx] == NO_PARTNER]
        ages = tables.age_index(particles.age[single])
        p_marry = tables.marriage_rate[yi, ages, particles.sex[single]] * dt
        pool = single[rng.random(len(single)) < p_marry]
        females = pool[particles.sex[pool] == FEMALE]
        males = pool[particles.sex[pool] == MALE]
        n_pairs = min(len(females), len(males))
        if n_pairs > 0:
            females = females[np.argsort(particles.wealth[females], kind="stable")]
            males_sorted = males[np.argsort(particles.wealth[males], kind="stable")]
            take_f = np.sort(rng.choice(len(females), size=n_pairs, replace=False))
            chosen_f = females[take_f]
            u = (take_f + 0.5) / len(females)
            theta = marriage_model.frank_theta
            if theta == copulas.INDEPENDENT:
                v = rng.random(n_pairs)
            else:
                v = copulas.conditional_quantile(copulas.FRANK, theta, u, rng.random(n_pairs))
            # match each target rank to the nearest still-available male
            available = list(range(len(males_sorted)))
            for f, vk in zip(chosen_f, v):
                pos = int(np.clip(round(vk * (len(males_sorted) - 1)), 0, len(males_sorted) - 1))
                j = min(available, key=lambda a: abs(a - pos))
                available.remove(j)
                m = males_sorted[j]
                total = particles.wealth[f] + particles.wealth[m]
                particles.wealth[f] = particles.wealth[m] = 0.5 * total
                particles.partner[f] = m
                particles.partner[m] = f
                log["marriages"] += 1

        # divorces: drawn per couple at the spouses' average hazard
        alive_idx = np.flatnonzero(particles.alive)
        married_idx = alive_idx[particles.partner[alive_idx] != NO_PARTNER]
        couples = married_idx[married_idx < particles.partner[married_idx]]
        if len(couples):
            a = couples
            b = particles.partner[couples]
            ra = tables.divorce_rate[yi, tables.age_index(particles.age[a]), particles.sex[a]]
            rb = tables.divorce_rate[yi, tables.age_index(particles.age[b]), particles.sex[b]]
            p_div = 0.5 * (ra + rb) * dt
            splitting = rng.random(len(couples)) < p_div
            for i, j in zip(a[splitting], b[splitting]):
                total = particles.wealth[i] + particles.wealth[j]
                s = float(marriage_model.sample_divorce_share(1, rng)[0])
                particles.wealth[i] = s * total
                particles.wealth[j] = (1.0 - s) * total
                particles.partner[i] = NO_PARTNER
                particles.partner[j] = NO_PARTNER
                log["divorces"] += 1

    return log


def effect_on_cdf(particles: Particles, grid: WealthGrid, event_kind: str,
                  tables: DemographyTables,
                  estate: EstateTaxSchedule | None = None,
                  inherit_model: InheritanceModel | None = None,
                  marriage_model: MarriageModel | None = None,
                  year: float = 0.0, dt: float = 1.0, n_reps: int = 5,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-bin CDF change rate from one event process, averaged over n_reps.

    The demography kind removes decedents' wealth and injects newborns (so the
    renormalization by population growth is implicit in the normalized CDFs);
    the inheritance kind applies only the heirs' receipt jumps; the marriage
    kind applies pooling and splitting. Effects are measured at bin upper edges.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if event_kind not in (DEMOGRAPHY, INHERITANCE, MARRIAGE):
        raise ValueError(f"unknown event kind: {event_kind}")
    base = _cdf_with_overflow(particles, grid)
    acc = np.zeros(grid.n_bins)
    for _ in range(n_reps):
        sim = particles.copy()
        if event_kind == DEMOGRAPHY:
            apply_events(sim, tables, None, None, None, year, dt, rng,
                         demography=True, inheritance=False, marriage=False,
                         age_population=False)
        elif event_kind == INHERITANCE:
            _apply_receipts_only(sim, tables, estate, inherit_model, year, dt, rng)
        else:
            apply_events(sim, tables, None, None, marriage_model, year, dt, rng,
                         demography=False, inheritance=False, marriage=True,
                         age_population=False)
        acc += (_cdf_with_overflow(sim, grid) - base) / dt
    return acc / n_reps


def _cdf_with_overflow(particles: Particles, grid: WealthGrid) -> np.ndarray:
    snap = build_histogram(particles.live_wealth(), grid)
    return snap.cdf + snap.overflow_below


def _apply_receipts_only(particles: Particles, tables: DemographyTables,
                         estate: EstateTaxSchedule | None,
                         inherit_model: InheritanceModel | None,
                         year: float, dt: float, rng: np.random.Generator) -> None:
    """Heirs receive bequests from simulated deaths, but nobody is removed."""
    yi = tables.year_index(year)
    alive_idx = np.flatnonzero(particles.alive)
    ages = tables.age_index(particles.age[alive_idx])
    p_death = tables.mortality[yi, ages, particles.sex[alive_idx]] * dt
    _check_rates(tables.mortality[yi], dt, "mortality")
    dying = alive_idx[rng.random(len(alive_idx)) < p_death]
    band = inherit_model.age_band_years if inherit_model is not None else 10.0
    ranks = _BandRanks(particles, band)
    live_wealth_sorted = np.sort(particles.wealth[particles.alive])
    for i in dying:
        w = particles.wealth[i]
        spouse = particles.partner[i]
        if spouse != NO_PARTNER and particles.alive[spouse]:
            particles.wealth[spouse] += w  # pooled-then-transferred, untaxed
            continue
        if w <= 0:
            continue
        heirs = simulate_heirs(particles.age[i], int(particles.sex[i]), year, tables, rng)
        if not heirs:
            continue
        tax = estate_tax_due(w, estate, year) if estate is not None else 0.0
        share = (w - tax) / len(heirs)
        u = _rank_in(w, live_wealth_sorted)
        for heir_age, _ in heirs:
            v = _heir_rank(u, inherit_model, rng)
            target = ranks.pick(int(heir_age // band), v)
            if target is not None:
                particles.wealth[target] += share


def effects_panel(Z, Xi, X, grid: WealthGrid, years, bandwidth_years: float = 10.0) -> dict:
    """Assemble per-year effect slices into a panel, smoothed over time."""
    years = np.asarray(years, dtype=float)

    def _smooth(arr):
        arr = np.asarray(arr, dtype=float)  # (n_years, n_bins)
        out = np.empty_like(arr)
        for b in range(arr.shape[1]):
            out[:, b] = moving_average(arr[:, b], years, bandwidth_years)
        return out

    return {"years": years, "Z": _smooth(Z), "Xi": _smooth(Xi), "X": _smooth(X), "grid": grid}
