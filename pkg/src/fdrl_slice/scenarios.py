"""Named scenario catalog: training scenarios and test-time shifts."""
from __future__ import annotations

from dataclasses import dataclass

from .env import MvnoScenario
from .errors import ConfigError

TOTAL_BANDWIDTH = 3e6


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    mvnos: tuple[MvnoScenario, ...]

    @property
    def user_counts(self) -> dict[int, int]:
        return {m.mvno_id: m.n_users for m in self.mvnos}

    def check(self, total_bandwidth: float, c_max: int) -> None:
        if not self.mvnos:
            raise ConfigError(f"scenario '{self.name}' has no MVNOs")
        ids = [m.mvno_id for m in self.mvnos]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"scenario '{self.name}': duplicate MVNO ids")
        leased = sum(m.leased_bandwidth for m in self.mvnos)
        if leased > total_bandwidth * (1 + 1e-12):
            raise ConfigError(f"scenario '{self.name}': leased {leased} Hz exceeds total {total_bandwidth} Hz")
        for m in self.mvnos:
            if m.n_users > c_max:
                raise ConfigError(f"scenario '{self.name}': MVNO {m.mvno_id} has {m.n_users} users > c_max={c_max}")


def build(name, n_users, urllc_probs, total_bandwidth=TOTAL_BANDWIDTH, proportional=False) -> ScenarioSpec:
    """Scenario with MVNO ids 1..M; bandwidth split equally or by user count."""
    total_users = sum(n_users)
    mvnos = []
    for i, (n, p) in enumerate(zip(n_users, urllc_probs), start=1):
        share = n / total_users if proportional else 1.0 / len(n_users)
        mvnos.append(MvnoScenario(i, n, p, total_bandwidth * share))
    return ScenarioSpec(name, tuple(mvnos))


def scenario_catalog(total_bandwidth: float = TOTAL_BANDWIDTH) -> dict[str, ScenarioSpec]:
    B = total_bandwidth
    specs = [
        build("noniid-equal", (5, 5, 5), (0.25, 0.50, 0.75), B),
        build("noniid-unequal", (5, 4, 3), (0.25, 0.50, 0.75), B, proportional=True),
        build("shift-probs-1", (5, 5, 5), (0.75, 0.25, 0.50), B),
        build("shift-probs-2", (5, 5, 5), (0.50, 0.75, 0.25), B),
        # test-time user counts keep the trained bandwidth split
        ScenarioSpec("shift-users-1", tuple(
            MvnoScenario(m.mvno_id, n, m.urllc_prob, m.leased_bandwidth)
            for m, n in zip(build("x", (5, 4, 3), (0.25, 0.50, 0.75), B, True).mvnos, (4, 3, 5)))),
        ScenarioSpec("shift-users-2", tuple(
            MvnoScenario(m.mvno_id, n, m.urllc_prob, m.leased_bandwidth)
            for m, n in zip(build("x", (5, 4, 3), (0.25, 0.50, 0.75), B, True).mvnos, (3, 5, 4)))),
    ]
    return {s.name: s for s in specs}


def get_scenario(name: str, total_bandwidth: float = TOTAL_BANDWIDTH) -> ScenarioSpec:
    catalog = scenario_catalog(total_bandwidth)
    if name not in catalog:
        raise ConfigError(f"unknown scenario '{name}'; known: {', '.join(catalog)}")
    return catalog[name]
