"""Command-line front end.

Every run is described by an :class:`ExperimentConfig`. The config is echoed
in full (channel tables included) into the sidecar record, so
``bccmac rerun RECORD`` reproduces the payload without the original files.

Exit codes: 0 success, 1 usage or validation error, 2 infeasible configuration.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import json
import secrets
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import records
from .channels import BccChannel, GaussianSystem
from .coding.simulate import (
    DISCRETE_EPSILON,
    GAUSSIAN_EPSILON,
    DiscreteSimConfig,
    GaussianSimConfig,
    SimResult,
    estimate_error_rates,
)
from .errors import ConfigurationError, ValidationError
from .prob import LogBase
from .regions import (
    DiscreteSystem,
    RateQuadruple,
    discrete_frontier_search,
    gaussian_bounds,
    gaussian_frontier,
    gaussian_membership,
    inner_point,
    system_bounds,
    within_bounds,
)
from .rfid import BoundRow, tdma_limit_report, universal_limit_report
from .rng import DEFAULT_SEED, check_seed
from .specfile import SystemSpec, gaussian_document, load_spec, loads_spec, system_document

MODES = ("region-discrete", "region-gaussian", "simulate-discrete", "simulate-gaussian", "sweep", "rfid-report")
SWEEP_BASES = ("simulate-discrete", "simulate-gaussian", "region-gaussian")
RATE_NAMES = ("r1_id", "r2_id", "r1_data", "r2_data")
SWEEP_AXES = {
    "simulate-discrete": ("n", *RATE_NAMES, "scale", "epsilon", "crossover"),
    "simulate-gaussian": ("n", *RATE_NAMES, "scale", "epsilon", "alpha", "P", "N1", "N2", "N3"),
    "region-gaussian": ("alpha",),
}


@dataclass
class ExperimentConfig:
    mode: str
    seed: int = DEFAULT_SEED
    unit: str = "nats"
    format: str = "csv"
    channel: dict | None = None  # discrete system document
    system: dict | None = None  # gaussian system document
    rates: list[float] | None = None  # in ``unit``
    scale: float | None = None
    alpha: float | None = None
    n: list[int] = field(default_factory=lambda: [64])
    trials: int = 1000
    epsilon: float | None = None
    mac_epsilon: float | None = None
    grid: int = 101
    budget: int = 512
    aux_cards: list[int] | None = None
    ml_decoder: bool = False
    sweep_base: str | None = None
    sweep_axis: str | None = None
    sweep_values: list[float] | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"config has unknown fields {sorted(unknown)}")
        return cls(**d)

    def validate(self):
        self.validate_scalars()
        return self._validate_mode()

    def validate_scalars(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        check_seed(self.seed)
        LogBase.parse(self.unit)
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, got {self.format!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValidationError(f"trials must be a positive integer, got {self.trials!r}")
        if not self.n or any(not isinstance(k, int) or k < 1 for k in self.n):
            raise ValidationError(f"n must be a non-empty list of positive integers, got {self.n!r}")
        if self.rates is not None and len(self.rates) != 4:
            raise ValidationError(f"rates needs four values r1_id,r2_id,r1_data,r2_data, got {len(self.rates)}")
        for name in ("epsilon", "mac_epsilon"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValidationError(f"{name} must be positive, got {v}")
        if self.grid < 2:
            raise ValidationError(f"grid must be >= 2, got {self.grid}")
        if self.budget < 1:
            raise ValidationError(f"budget must be >= 1, got {self.budget}")
        if self.aux_cards is not None and (len(self.aux_cards) != 2 or min(self.aux_cards) < 1):
            raise ValidationError(f"aux-cards needs two positive integers, got {self.aux_cards}")
        return self

    def _validate_mode(self):
        mode = self.sweep_base if self.mode == "sweep" else self.mode
        if self.mode == "sweep":
            if self.sweep_base not in SWEEP_BASES:
                raise ValidationError(f"sweep base must be one of {SWEEP_BASES}, got {self.sweep_base!r}")
            if self.sweep_axis not in SWEEP_AXES[self.sweep_base]:
                raise ValidationError(
                    f"sweep axis for {self.sweep_base} must be one of {SWEEP_AXES[self.sweep_base]}, "
                    f"got {self.sweep_axis!r}"
                )
            if not self.sweep_values:
                raise ValidationError("sweep needs at least one axis value")
            if self.sweep_axis != "n" and len(self.n) != 1:
                raise ValidationError("sweeping a non-n axis needs exactly one n")
        if mode in ("region-discrete", "simulate-discrete") and self.channel is None:
            raise ValidationError(f"{mode} needs --channel-file")
        if mode in ("region-gaussian", "simulate-gaussian") and self.system is None:
            raise ValidationError(f"{mode} needs --system")
        if mode == "rfid-report" and (self.channel is None) == (self.system is None):
            raise ValidationError("rfid-report needs exactly one of --channel-file or --system")
        if mode in ("simulate-discrete", "simulate-gaussian"):
            if (self.rates is None) == (self.scale is None):
                raise ValidationError(f"{mode} needs exactly one of --rates or --scale")
        if mode == "simulate-gaussian" and self.alpha is None:
            raise ValidationError("simulate-gaussian needs --alpha")
        return self


def artifact_version() -> str:
    try:
        sha = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        sha = ""
    return f"{__version__}+g{sha}" if sha else __version__


# builders --------------------------------------------------------------------

def _unit(cfg) -> LogBase:
    return LogBase.parse(cfg.unit)


def _gaussian(cfg, **override) -> GaussianSystem:
    doc = dict(cfg.system)
    doc.update(override)
    return loads_spec(_dump(doc), "<config.system>")


def _discrete(cfg) -> SystemSpec:
    return loads_spec(_dump(cfg.channel), "<config.channel>")


def _dump(doc) -> str:
    return json.dumps(doc)


def _rates(cfg, bounds=None, override: dict | None = None) -> RateQuadruple:
    u = _unit(cfg)
    if cfg.rates is not None:
        vals = dict(zip(RATE_NAMES, (u.to_nats(float(v)) for v in cfg.rates)))
    else:
        vals = dict(zip(RATE_NAMES, inner_point(bounds, cfg.scale).as_tuple()))
    for k, v in (override or {}).items():
        vals[k] = u.to_nats(float(v))
    return RateQuadruple(**vals)


def _rate_cols(u: LogBase, names) -> list[str]:
    return [f"{k}_{u.value}" for k in names]


SIM_COLUMNS = [
    "n", "trials", "bcc_errors", "mac_trials", "mac_errors", "overall_errors",
    "lambda_bcc", "bcc_ci_lo", "bcc_ci_hi", "lambda_mac", "mac_ci_lo", "mac_ci_hi",
    "lambda_overall", "overall_ci_lo", "overall_ci_hi", "lambda_composed",
    "bcc_encode_failure", "bcc_miss", "bcc_wrong", "mac_encode_failure", "mac_miss", "mac_wrong",
]


def _sim_row(res: SimResult, r: RateQuadruple, u: LogBase) -> list:
    ev = res.events
    return [
        res.n, res.trials, res.bcc_errors, res.mac_trials, res.mac_errors, res.overall_errors,
        res.lambda_bcc, *res.ci_bcc, res.lambda_mac, *res.ci_mac,
        res.lambda_overall, *res.ci_overall, res.lambda_composed,
        ev["bcc_encode_failure"], ev["bcc_miss"], ev["bcc_wrong"],
        ev["mac_encode_failure"], ev["mac_miss"], ev["mac_wrong"],
        *(u.from_nats(v) for v in r.as_tuple()),
    ]


def _sim_columns(u: LogBase) -> list[str]:
    return SIM_COLUMNS + _rate_cols(u, RATE_NAMES)


def _discrete_sim(cfg, n: int, rate_override=None, crossover=None, epsilon=None, scale=None) -> list:
    spec = _discrete(cfg)
    if spec.witness is None:
        raise ValidationError("simulate-discrete needs a channel file with a 'witness' section")
    system = spec.system
    if crossover is not None:
        if system.bcc.cond.shape != (2, 2, 2):
            raise ValidationError("the crossover axis needs a binary broadcast channel")
        system = DiscreteSystem(BccChannel.bsc_pair(crossover, crossover), system.imp1, system.imp2, system.mac)
    w = spec.witness
    c = dataclasses.replace(cfg, scale=cfg.scale if scale is None else scale)
    # scaled rates come from the nominal channel, so a crossover sweep changes only the noise
    bounds = system_bounds(spec.system, w["p_uvx"], w["p_q1"], w["p_q2"])
    r = _rates(c, bounds, rate_override)
    sim = DiscreteSimConfig(
        system, w["p_uvx"], w["p_q1"], w["p_q2"], r,
        epsilon=epsilon or cfg.epsilon or DISCRETE_EPSILON, ml_decoder=cfg.ml_decoder,
        mac_epsilon=cfg.mac_epsilon,
    )
    return _sim_row(estimate_error_rates(sim, n, cfg.trials, cfg.seed), r, _unit(cfg))


def _gaussian_sim(cfg, n: int, rate_override=None, epsilon=None, scale=None, alpha=None, sys_override=None) -> list:
    sys_ = _gaussian(cfg, **(sys_override or {}))
    a = cfg.alpha if alpha is None else alpha
    c = dataclasses.replace(cfg, scale=cfg.scale if scale is None else scale)
    r = _rates(c, gaussian_bounds(sys_, a), rate_override)
    sim = GaussianSimConfig(sys_, a, r, epsilon=epsilon or cfg.epsilon or GAUSSIAN_EPSILON,
                            ml_decoder=cfg.ml_decoder, mac_epsilon=cfg.mac_epsilon)
    return _sim_row(estimate_error_rates(sim, n, cfg.trials, cfg.seed), r, _unit(cfg))


def _gaussian_row(alpha, b, u: LogBase) -> list:
    return [alpha, *(u.from_nats(v) for v in b)]


def run_region_gaussian(cfg) -> records.Table:
    u = _unit(cfg)
    sys_ = _gaussian(cfg)
    if cfg.rates is not None:
        r = _rates(cfg)
        iv = gaussian_membership(r, sys_)
        cols = ["member", "alpha_lo", "alpha_hi", "lo_closed", "hi_closed"]
        row = [bool(iv), iv.lo, iv.hi, iv.lo_closed, iv.hi_closed] if iv else [False, None, None, None, None]
        return records.Table("gaussian-membership", cols, [row], u.value)
    cols = ["alpha", *_rate_cols(u, ("id1", "id2", "data1", "data2", "data_sum"))]
    rows = [_gaussian_row(a, b, u) for a, b in gaussian_frontier(sys_, cfg.grid)]
    return records.Table("gaussian-frontier", cols, rows, u.value)


DISCRETE_BOUND_NAMES = ("id1", "id2", "id_sum", "data1", "data2", "data_sum")


def run_region_discrete(cfg) -> records.Table:
    u = _unit(cfg)
    spec = _discrete(cfg)
    if cfg.rates is not None:
        if spec.witness is None:
            raise ValidationError("a membership query needs a channel file with a 'witness' section")
        w = spec.witness
        b = system_bounds(spec.system, w["p_uvx"], w["p_q1"], w["p_q2"])
        member = within_bounds(_rates(cfg), b)
        cols = ["member", *_rate_cols(u, DISCRETE_BOUND_NAMES)]
        return records.Table("discrete-membership", cols, [[member, *(u.from_nats(v) for v in b)]], u.value)
    aux = tuple(cfg.aux_cards) if cfg.aux_cards else None
    pts = discrete_frontier_search(spec.system, aux, cfg.budget, cfg.seed)
    cols = _rate_cols(u, RATE_NAMES) + _rate_cols(u, DISCRETE_BOUND_NAMES)
    rows = [[*(u.from_nats(v) for v in r.as_tuple()), *(u.from_nats(v) for v in w.bounds)] for r, w in pts]
    meta = {"witnesses": [
        {"p_uvx": w.p_uvx.probs.tolist(), "p_q1": w.p_q1.probs.tolist(), "p_q2": w.p_q2.probs.tolist()}
        for _, w in pts
    ]}
    return records.Table("discrete-frontier", cols, rows, u.value, meta)


def run_simulate(cfg) -> records.Table:
    u = _unit(cfg)
    fn = _discrete_sim if cfg.mode == "simulate-discrete" else _gaussian_sim
    rows = [fn(cfg, n) for n in cfg.n]
    return records.Table(cfg.mode, _sim_columns(u), rows, u.value)


def run_sweep(cfg) -> records.Table:
    u = _unit(cfg)
    axis, base = cfg.sweep_axis, cfg.sweep_base
    rows = []
    if base == "region-gaussian":
        sys_ = _gaussian(cfg)
        for a in cfg.sweep_values:
            rows.append(_gaussian_row(float(a), gaussian_bounds(sys_, float(a)), u))
        cols = ["alpha", *_rate_cols(u, ("id1", "id2", "data1", "data2", "data_sum"))]
        return records.Table("sweep-region-gaussian", cols, rows, u.value)
    for v in cfg.sweep_values:
        kw = {}
        n = cfg.n[0]
        if axis == "n":
            n = int(v)
            if n != v or n < 1:
                raise ValidationError(f"sweep value {v} is not a positive integer block length")
        elif axis in RATE_NAMES:
            kw["rate_override"] = {axis: v}
        elif axis in ("scale", "epsilon", "alpha", "crossover"):
            kw[axis] = float(v)
        else:
            kw["sys_override"] = {axis: float(v)}
        fn = _discrete_sim if base == "simulate-discrete" else _gaussian_sim
        rows.append([v, *fn(cfg, n, **kw)])
    return records.Table(f"sweep-{base}", ["value", *_sim_columns(u)], rows, u.value, {"axis": axis})


def run_rfid(cfg) -> records.Table:
    u = _unit(cfg)
    n = cfg.n[0]
    if cfg.system is not None:
        frontier = gaussian_frontier(_gaussian(cfg), cfg.grid)
    else:
        spec = _discrete(cfg)
        aux = tuple(cfg.aux_cards) if cfg.aux_cards else None
        frontier = [BoundRow.of(w.bounds) for _, w in discrete_frontier_search(spec.system, aux, cfg.budget, cfg.seed)]
        if spec.witness is not None:
            w = spec.witness
            frontier.append(BoundRow.of(system_bounds(spec.system, w["p_uvx"], w["p_q1"], w["p_q2"])))
    cols = ["report", "max_tags", *_rate_cols(u, ("per_tag_id_rate", "tdma_uplink_rate", "universal_uplink_sum_rate")),
            "n", "alpha", "note"]
    rows = []
    for name, rep in (("tdma", tdma_limit_report(frontier, n)), ("universal", universal_limit_report(frontier, n))):
        rows.append([name, rep.max_tags, u.from_nats(rep.per_tag_id_rate), u.from_nats(rep.tdma_uplink_rate),
                     u.from_nats(rep.universal_uplink_sum_rate), rep.n, rep.alpha, rep.note])
    return records.Table("rfid-report", cols, rows, u.value)


RUNNERS = {
    "region-gaussian": run_region_gaussian,
    "region-discrete": run_region_discrete,
    "simulate-discrete": run_simulate,
    "simulate-gaussian": run_simulate,
    "sweep": run_sweep,
    "rfid-report": run_rfid,
}


def run(cfg: ExperimentConfig) -> records.Table:
    cfg.validate()
    return RUNNERS[cfg.mode](cfg)


# argument parsing -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _system_arg(value: str, allow_alpha_one: bool) -> dict:
    """Gaussian parameters from a spec file or an inline ``P=10,N1=1,...`` list."""
    if "=" in value and not Path(value).exists():
        doc = {"kind": "gaussian"}
        for part in value.split(","):
            k, _, v = part.partition("=")
            k = k.strip()
            if k not in ("P", "N1", "N2", "N3", "alpha1", "alpha2"):
                raise ValidationError(f"--system: unknown parameter {k!r}")
            try:
                doc[k] = float(v)
            except ValueError:
                raise ValidationError(f"--system: {k} is not a number: {v!r}") from None
    else:
        obj = load_spec(value)
        if not isinstance(obj, GaussianSystem):
            raise ValidationError(f"{value}: expected kind 'gaussian'")
        doc = gaussian_document(obj)
    if allow_alpha_one:
        doc["allow_alpha_one"] = True
    loads_spec(_dump(doc), "--system")  # validate now
    return doc


def _channel_arg(path: str) -> dict:
    obj = load_spec(path)
    if not isinstance(obj, SystemSpec):
        raise ValidationError(f"{path}: expected kind 'system'")
    return system_document(obj.system, obj.witness)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--channel-file", help="discrete system file (kind 'system')")
    common.add_argument("--system", help="gaussian system file or inline P=..,N1=..,N2=..,N3=..,alpha1=..,alpha2=..")
    common.add_argument("--rates", type=_floats, help="r1_id,r2_id,r1_data,r2_data in --unit")
    common.add_argument("--scale", type=float, help="rates at this fraction of the witness/alpha bounds")
    common.add_argument("--alpha", type=float, help="power split for gaussian simulation")
    common.add_argument("--n", type=_ints, default=[64], help="block length(s), comma-separated")
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--epsilon", type=float, help=f"typicality slack (default {DISCRETE_EPSILON} discrete, {GAUSSIAN_EPSILON} gaussian)")
    common.add_argument("--mac-epsilon", type=float, help="uplink typicality slack (default: --epsilon)")
    seed = common.add_mutually_exclusive_group()
    seed.add_argument("--seed", type=int, default=DEFAULT_SEED)
    seed.add_argument("--entropy-seed", action="store_true", help="draw the seed from the OS; it is recorded")
    common.add_argument("--unit", choices=("bits", "nats"), default="nats")
    common.add_argument("--out", help="payload file; a .record.json sidecar is written next to it")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--grid", type=int, default=101, help="alpha grid size")
    common.add_argument("--budget", type=int, default=512, help="frontier search evaluations")
    common.add_argument("--aux-cards", type=_ints, help="|U|,|V| for the frontier search")
    common.add_argument("--ml-decoder", action="store_true", help="maximum-likelihood decoders instead of typicality")
    common.add_argument("--allow-alpha-one", action="store_true", help="accept alpha1 or alpha2 equal to 1")

    p = _Parser(prog="bccmac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bccmac {__version__}")
    sub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for mode in MODES:
        sp = sub.add_parser(mode, parents=[common])
        if mode == "sweep":
            sp.add_argument("--base", choices=SWEEP_BASES, required=True)
            sp.add_argument("--axis", required=True)
            sp.add_argument("--values", type=_floats, required=True)
    rr = sub.add_parser("rerun", help="re-run the config stored in a record file")
    rr.add_argument("record")
    rr.add_argument("--out", help="payload file (default: next to the record)")
    return p


def config_from_args(a) -> ExperimentConfig:
    seed = secrets.randbits(63) if a.entropy_seed else a.seed
    # scalar checks first, so that e.g. a bad --trials is reported before any file is read
    ExperimentConfig(mode=a.mode, seed=seed, unit=a.unit, format=a.format, trials=a.trials, n=a.n,
                     channel={}, system={}, rates=a.rates, scale=0.0, alpha=0.0,
                     epsilon=a.epsilon, mac_epsilon=a.mac_epsilon, grid=a.grid, budget=a.budget,
                     aux_cards=a.aux_cards).validate_scalars()
    return ExperimentConfig(
        mode=a.mode,
        seed=seed,
        unit=a.unit,
        format=a.format,
        channel=_channel_arg(a.channel_file) if a.channel_file else None,
        system=_system_arg(a.system, a.allow_alpha_one) if a.system else None,
        rates=a.rates,
        scale=a.scale,
        alpha=a.alpha,
        n=a.n,
        trials=a.trials,
        epsilon=a.epsilon,
        mac_epsilon=a.mac_epsilon,
        grid=a.grid,
        budget=a.budget,
        aux_cards=a.aux_cards,
        ml_decoder=a.ml_decoder,
        sweep_base=getattr(a, "base", None),
        sweep_axis=getattr(a, "axis", None),
        sweep_values=getattr(a, "values", None),
    )


def execute(cfg: ExperimentConfig, out: str | None, stdout=None) -> records.Table:
    table = run(cfg)
    if out is None:
        (stdout or sys.stdout).write(records.emit(table, cfg.format))
        return table
    data = records.write_payload(table, out, cfg.format)
    stamp = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    records.write_record(out, cfg.to_dict(), data, artifact_version(), stamp)
    return table


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        if a.mode == "rerun":
            rec = records.read_record(a.record)
            cfg = ExperimentConfig.from_dict(rec["config"])
            out = a.out or str(Path(a.record).with_name(rec.get("payload_file", "rerun.out")))
        else:
            cfg = config_from_args(a)
            out = a.out
        execute(cfg, out)
        return 0
    except ConfigurationError as e:
        print(f"bccmac: infeasible configuration: {e}", file=sys.stderr)
        return 2
    except ValidationError as e:
        print(f"bccmac: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
