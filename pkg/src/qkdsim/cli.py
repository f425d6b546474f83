"""Command-line interface: scenario in, CSV tables out.

    qkdsim <command> --scenario <file> --out <dir> [--seed N] [--set key=value ...]

Commands emit one CSV per run (the sweep command emits one per value). Every
CSV starts with a comment header carrying the artifact version, the command,
the seed, any overrides, and the fully resolved scenario, so a table is
reproducible from its own header. Numeric cells use scientific notation with
nine significant digits; reruns with identical inputs are byte-identical.

Exit codes: 0 success, 1 usage error, 2 domain/configuration/IO error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__, events, keyrate, timetags
from .kernels import BACKEND
from .linkbudget import link_attenuation_db
from .orbit import pass_profile, pass_sample, point_ahead, slew_rates
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    apply_overrides,
    default_scenario,
    dump_scenario,
    load_scenario,
    set_value,
)

COMMANDS = (
    "pass-profile",
    "link-sweep",
    "qber-sweep",
    "keyrate-sweep",
    "pass-key",
    "montecarlo",
    "databudget",
    "annual-yield",
    "sweep",
)

USAGE_EXIT = 1
DOMAIN_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.8e}"
    return str(value)


def _write_csv(
    path: Path,
    scenario: ScenarioConfig,
    command: str,
    seed: int | None,
    overrides: Sequence[tuple[str, str]],
    columns: Sequence[str],
    rows: Iterable[Sequence],
) -> None:
    lines = [f"# qkdsim {__version__}", f"# command: {command}"]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    for key, value in overrides:
        lines.append(f"# override: {key} = {value}")
    lines.extend("# " + line for line in dump_scenario(scenario).splitlines())
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _attenuation_at(scenario: ScenarioConfig, sample) -> float:
    return link_attenuation_db(
        scenario.link,
        scenario.atmosphere,
        sample.slant_range_km,
        sample.zenith_rad,
        zenith_r0_scaling=scenario.model.zenith_r0_scaling,
    )


def _profile(scenario: ScenarioConfig):
    return pass_profile(
        scenario.orbit,
        scenario.sweep.profile_dt_s,
        scenario.integration.min_elevation_rad,
    )


def _a_grid(scenario: ScenarioConfig) -> list[float]:
    sweep = scenario.sweep
    n = int(round((sweep.a_db_max - sweep.a_db_min) / sweep.a_db_step))
    return [sweep.a_db_min + k * sweep.a_db_step for k in range(n + 1)]


def _cmd_pass_profile(scenario, out_dir, seed, overrides) -> None:
    rows = []
    for s in _profile(scenario):
        rates = slew_rates(scenario.orbit, s.t_s)
        ahead = point_ahead(scenario.orbit, s.t_s)
        rows.append(
            (
                s.t_s,
                s.slant_range_km,
                s.zenith_rad,
                s.elevation_rad,
                rates.ogs_rate_rad_s,
                rates.sat_rate_rad_s,
                ahead.light_time_s,
                ahead.angle_rad,
            )
        )
    _write_csv(
        out_dir / "pass-profile.csv",
        scenario,
        "pass-profile",
        seed,
        overrides,
        [
            "t_s",
            "slant_range_km",
            "zenith_rad",
            "elevation_rad",
            "ogs_slew_rad_s",
            "sat_slew_rad_s",
            "light_time_s",
            "point_ahead_rad",
        ],
        rows,
    )


def _cmd_link_sweep(scenario, out_dir, seed, overrides) -> None:
    sweep = scenario.sweep
    combos = [
        (lam, a0, r0)
        for lam, a0 in zip(sweep.wavelengths_m, sweep.wavelength_a_atm0_db)
        for r0 in sweep.r0_values
    ]
    columns = ["t_s", "slant_range_km", "zenith_rad"] + [
        f"a_db_lam{lam*1e9:.0f}nm_r0{r0*100:.0f}cm" for lam, _, r0 in combos
    ]
    rows = []
    for s in _profile(scenario):
        row = [s.t_s, s.slant_range_km, s.zenith_rad]
        for lam, a0, r0 in combos:
            link = replace(scenario.link, wavelength_m=lam, a_atm0_db=a0)
            atmo = replace(scenario.atmosphere, fried_r0_m=r0)
            row.append(
                link_attenuation_db(
                    link,
                    atmo,
                    s.slant_range_km,
                    s.zenith_rad,
                    zenith_r0_scaling=scenario.model.zenith_r0_scaling,
                )
            )
        rows.append(row)
    _write_csv(
        out_dir / "link-sweep.csv",
        scenario,
        "link-sweep",
        seed,
        overrides,
        columns,
        rows,
    )


def _metrics_for_dcr(scenario, a_db: float, dcr: float) -> keyrate.KeyRateMetrics:
    source = replace(scenario.source, d_b_cps=dcr)
    return keyrate.key_rate_metrics(source, a_db, scenario.model.cross_term_sign)


def _cmd_qber_sweep(scenario, out_dir, seed, overrides) -> None:
    dcrs = scenario.sweep.dcr_values
    columns = ["a_db"] + [
        f"{name}_dcr{dcr:.0f}" for dcr in dcrs for name in ("qber", "snr", "visibility")
    ]
    rows = []
    for a_db in _a_grid(scenario):
        row = [a_db]
        for dcr in dcrs:
            m = _metrics_for_dcr(scenario, a_db, dcr)
            row.extend((m.qber, m.snr, m.visibility))
        rows.append(row)
    _write_csv(
        out_dir / "qber-sweep.csv",
        scenario,
        "qber-sweep",
        seed,
        overrides,
        columns,
        rows,
    )


def _cmd_keyrate_sweep(scenario, out_dir, seed, overrides) -> None:
    dcrs = scenario.sweep.dcr_values
    columns = ["a_db"] + [
        f"{name}_dcr{dcr:.0f}"
        for dcr in dcrs
        for name in ("r_coinc_cps", "r_secure_cps")
    ]
    rows = []
    for a_db in _a_grid(scenario):
        row = [a_db]
        for dcr in dcrs:
            m = _metrics_for_dcr(scenario, a_db, dcr)
            row.extend((m.r_coinc_cps, m.r_secure_cps))
        rows.append(row)
    _write_csv(
        out_dir / "keyrate-sweep.csv",
        scenario,
        "keyrate-sweep",
        seed,
        overrides,
        columns,
        rows,
    )


def _cmd_pass_key(scenario, out_dir, seed, overrides) -> None:
    samples = _profile(scenario)
    half_cap = scenario.integration.max_window_s / 2.0
    rows = []
    cumulative = 0.0
    prev_rate = None
    prev_t = None
    for s in samples:
        a_db = _attenuation_at(scenario, s)
        usable = abs(s.t_s) <= half_cap and a_db <= scenario.integration.loss_cutoff_db
        rate = (
            keyrate.secure_key_rate(scenario.source, a_db, scenario.model.cross_term_sign)
            if usable
            else 0.0
        )
        if prev_rate is not None:
            cumulative += 0.5 * (prev_rate + rate) * (s.t_s - prev_t)
        rows.append((s.t_s, a_db, rate, cumulative))
        prev_rate, prev_t = rate, s.t_s
    _write_csv(
        out_dir / "pass-key.csv",
        scenario,
        "pass-key",
        seed,
        overrides,
        ["t_s", "a_db", "r_secure_cps", "cumulative_bits"],
        rows,
    )


def _cmd_montecarlo(scenario, out_dir, seed, overrides) -> None:
    sim = scenario.sim if seed is None else replace(scenario.sim, rng_seed=seed)
    alice, bob = events.simulate_streams(sim)
    tau = scenario.source.tau_s
    matches = events.match_coincidences(alice, bob, tau, offset_s=sim.clock_offset_s)
    mc = events.estimate_metrics(matches, alice, bob)

    out_dir.mkdir(parents=True, exist_ok=True)
    for stream in (alice, bob):
        data = timetags.encode_stream(
            stream.times, stream.basis, stream.outcome, scenario.budget.delta_t_s, "relative"
        )
        (out_dir / f"{stream.channel}.ntt").write_bytes(data)

    analytic_source = replace(
        scenario.source,
        mu=sim.pair_rate_cps * tau,
        d_a_cps=sim.d_a_cps,
        d_b_cps=sim.d_b_cps,
        b_cps=sim.b_cps,
        n_det=sim.n_det,
        eta_a=sim.eta_a,
        e_d=sim.e_d,
    )
    q = keyrate.coincidence_probability(
        analytic_source, sim.eta_b, scenario.model.cross_term_sign
    )
    rate = keyrate.coincidence_rate(analytic_source, q)
    qber = keyrate.qber(analytic_source, sim.eta_b, scenario.model.cross_term_sign)
    vis = keyrate.visibility(qber)

    def z(analytic, estimate, sigma):
        return (estimate - analytic) / sigma if sigma > 0 else 0.0

    rows = [
        (
            "coincidence_rate_cps",
            rate,
            mc.coincidence_rate_cps,
            mc.coincidence_rate_sigma,
            z(rate, mc.coincidence_rate_cps, mc.coincidence_rate_sigma),
        ),
        ("qber", qber, mc.qber, mc.qber_sigma, z(qber, mc.qber, mc.qber_sigma)),
        (
            "visibility",
            vis,
            mc.visibility,
            mc.visibility_sigma,
            z(vis, mc.visibility, mc.visibility_sigma),
        ),
    ]
    _write_csv(
        out_dir / "montecarlo.csv",
        scenario,
        "montecarlo",
        seed,
        overrides,
        ["metric", "analytic", "mc_estimate", "mc_sigma", "z_score"],
        rows,
    )


def _cmd_databudget(scenario, out_dir, seed, overrides) -> None:
    b = scenario.budget
    bits = timetags.bits_per_event(b.horizon_s, b.delta_t_s)
    rate = timetags.stream_rate(b.event_rate_cps, bits.byte_aligned)
    volume = timetags.pass_volume(b.experiment_duration_s, rate, b.passes_per_day)
    hk = timetags.housekeeping_volume(
        b.hk_channels, b.hk_bytes_per_value, b.hk_sample_rate_hz, b.hk_duration_s
    )
    rel_bits = timetags.RELATIVE_RECORD_BYTES * 8
    rows = [
        ("bits_per_event_exact", bits.exact),
        ("bits_per_event", float(bits.byte_aligned)),
        ("stream_rate_bytes_s", rate),
        ("volume_per_experiment_bytes", volume.per_experiment_bytes),
        ("volume_per_day_bytes", volume.per_day_bytes),
        ("housekeeping_bytes_per_day", hk),
        ("relative_record_bits", float(rel_bits)),
        ("relative_mode_saving", 1.0 - rel_bits / bits.byte_aligned),
    ]
    _write_csv(
        out_dir / "databudget.csv",
        scenario,
        "databudget",
        seed,
        overrides,
        ["quantity", "value"],
        rows,
    )


def _cmd_annual_yield(scenario, out_dir, seed, overrides) -> None:
    if not scenario.annual.histogram:
        raise ScenarioError("annual.histogram is empty; provide r0:days bins")
    hist = keyrate.FriedHistogram(bins=scenario.annual.histogram)
    total_days = hist.total_days
    rows = []
    total = 0.0
    for r0, days in hist.bins:
        varied = replace(scenario, atmosphere=replace(scenario.atmosphere, fried_r0_m=r0))
        bits = keyrate.key_per_pass(varied)
        share = days / total_days if total_days else 0.0
        passes = scenario.annual.passes_per_year * share
        contribution = bits * passes
        total += contribution
        rows.append((r0, days, share, passes, bits, contribution))
    rows.append((0.0, total_days, 1.0, scenario.annual.passes_per_year, 0.0, total))
    _write_csv(
        out_dir / "annual-yield.csv",
        scenario,
        "annual-yield",
        seed,
        overrides,
        ["r0_m", "days", "share", "passes", "bits_per_pass", "bits_total"],
        rows,
    )


_COMMAND_FN = {
    "pass-profile": _cmd_pass_profile,
    "link-sweep": _cmd_link_sweep,
    "qber-sweep": _cmd_qber_sweep,
    "keyrate-sweep": _cmd_keyrate_sweep,
    "pass-key": _cmd_pass_key,
    "montecarlo": _cmd_montecarlo,
    "databudget": _cmd_databudget,
    "annual-yield": _cmd_annual_yield,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="qkdsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qkdsim {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(COMMANDS))
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", type=Path, default=None, help="scenario file (defaults apply if omitted)")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed override")
        p.add_argument(
            "--set",
            dest="sets",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one scenario key (repeatable)",
        )
        if name == "sweep":
            p.add_argument("--param", required=True, help="dotted scenario key to sweep")
            p.add_argument("--values", required=True, help="comma-separated values")
            p.add_argument(
                "--command",
                dest="inner",
                required=True,
                choices=[c for c in COMMANDS if c != "sweep"],
                help="command to run at each value",
            )
    return parser


def _resolve_scenario(args) -> tuple[ScenarioConfig, list[tuple[str, str]]]:
    overrides: list[tuple[str, str]] = []
    if args.scenario is not None:
        scenario = load_scenario(args.scenario)
        overrides.append(("scenario-file", str(args.scenario)))
    else:
        scenario = default_scenario()
    sets: dict[str, str] = {}
    for item in args.sets:
        key, eq, value = item.partition("=")
        if not eq:
            raise ScenarioError(f"--set expects KEY=VALUE, got {item!r}")
        sets[key.strip()] = value.strip()
        overrides.append((key.strip(), value.strip()))
    if sets:
        scenario = apply_overrides(scenario, sets)
    return scenario, overrides


def _run_command(name: str, scenario, out_dir: Path, seed, overrides) -> None:
    _COMMAND_FN[name](scenario, out_dir, seed, overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario, overrides = _resolve_scenario(args)
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            for value in values:
                varied = set_value(scenario, args.param, value)
                sub_dir = args.out / f"{args.param.replace('.', '_')}={value}"
                _run_command(
                    args.inner,
                    varied,
                    sub_dir,
                    args.seed,
                    overrides + [(args.param, value)],
                )
        else:
            _run_command(args.command, scenario, args.out, args.seed, overrides)
    except (ScenarioError, ValueError, OSError, events.EventBudgetError) as exc:
        print(f"qkdsim: error: {exc}", file=sys.stderr)
        return DOMAIN_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
