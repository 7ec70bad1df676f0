"""Scenario configs and the end-to-end aggregation pipeline.

A scenario is a JSON document validated against ``schema.json``.  Missing
fields take the defaults in :data:`DEFAULTS`.  All randomness comes from the
single ``seed``, split into per-stage seeds by :func:`stage_seed`:

    0  channel-1 data      1  channel-2 data
    2  ASE after the transmitter
    3  ASE after aggregation
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import jsonschema
import numpy as np

from .aggregator import (AggregationPlan, CwCalibration, aggregate, alignment_to, calibrate_cw,
                         closest_prediction, diagnostics, phi_for_relative_phase, predict_format,
                         realizes, solve_for_target, spectrum_support)
from .errors import ConfigError
from .link_elements import (DEFAULT_ASE_BPF_HZ, AseNoiseSpec, DispersionSpec, NoiseReference, WeightPlan,
                            apply_ase, apply_dispersion, apply_weight)
from .modulators import MzmParams, RfDrive, mzm_modulate, significant_order
from .receiver_dsp import ConstellationReport, RxConfig, receive, recover_symbols
from .signal_core import ComplexEnvelope, FilterSpec
from .transmitter import ParentChannels, PulseShape, TxConfig, build_parent_channels

STAGES = {"data1": 0, "data2": 1, "ase_tx": 2, "ase_agg": 3}

DEFAULTS = {
    "seed": 1,
    "transmitter": {
        "pulse": {"kind": "raised_cosine_nrz", "rolloff": 1.0, "comb_lines": 3},
        "n_symbols": 4000,
        "sample_rate_hz": 640e9,
        "carrier_mod_index": 1.0,
        "carrier_phase_rad": 0.0,
        "suppression_db": 20.0,
        "decorrelation": "independent_data",
        "dispersion_ps_per_nm": 0.0,
        "block_residual": True,
        "center_freq_hz": 193.4e12,
    },
    "link": {"alpha": None, "ase_after_tx": None, "ase_after_aggregation": None},
    "aggregation": {
        "rf_freq_hz": 18e9,
        "mod_index": 1.0,
        "bias_v": 1.0,
        "v_pi": 1.0,
        "extinction_ratio_db": 20.0,
        "phi_rad": "auto",
        "select_bandwidth_hz": None,
    },
    "receiver": {
        "mode": "homodyne_ideal",
        "lo_offset_hz": 0.0,
        "lowpass_bw_hz": None,
        "samples_per_symbol_out": 16,
        "n_blocks": 10,
    },
    "outputs": {
        "spectrum": True,
        "eye": False,
        "symbols": True,
        "envelope": False,
        "diagnostics": True,
        "parent_report": True,
    },
}

SWEEPABLE = ("phi_rad", "alpha", "target_evm_pct", "rate_baud")


def _schema() -> dict:
    return json.loads(resources.files("optagg").joinpath("schema.json").read_text(encoding="utf-8"))


def stage_seed(seed: int, stage: str) -> int:
    """Independent 63-bit seed for one pipeline stage."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(STAGES[stage],))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def locate_line(text: Optional[str], path) -> Optional[int]:
    """Line of the innermost key in ``path`` within the JSON source, if found."""
    if text is None:
        return None
    pos, line = 0, None
    for key in path:
        if not isinstance(key, str):
            continue
        m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(text, pos)
        if m is None:
            break
        pos = m.start()
        line = text.count("\n", 0, pos) + 1
    return line


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _err(msg: str, path, text):
    dotted = ".".join(str(p) for p in path)
    return ConfigError(msg, field=dotted or None, line=locate_line(text, path))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Validated, default-filled scenario."""

    config: dict
    source_text: Optional[str] = None

    @property
    def name(self) -> str:
        return self.config["name"]

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    def section(self, key: str) -> dict:
        return self.config[key]

    def with_overrides(self, **changes) -> "Scenario":
        """Copy with dotted-path overrides, e.g. ``{"link.alpha": 0.5}``; re-validated."""
        cfg = copy.deepcopy(self.config)
        for dotted, v in changes.items():
            keys = dotted.split(".")
            d = cfg
            for k in keys[:-1]:
                d = d.setdefault(k, {})
            d[keys[-1]] = v
        return Scenario.from_dict(cfg)

    def config_hash(self) -> str:
        canon = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, source_text: Optional[str] = None) -> "Scenario":
        errors = sorted(jsonschema.Draft202012Validator(_schema()).iter_errors(data),
                        key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            raise _err(e.message, list(e.absolute_path), source_text)
        cfg = _merge(DEFAULTS, data)
        scn = cls(cfg, source_text)
        scn._check_semantics()
        return scn

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno) from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object", line=1)
        if "manifest_version" in data:
            # A run manifest: replay its recorded config.
            return cls.from_dict(data["config"])
        return cls.from_dict(data, text)

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        return cls.from_json(text)

    # Objects built from the config.

    def pulse(self) -> PulseShape:
        p = self.config["transmitter"]["pulse"]
        return PulseShape(p["kind"], float(p["rolloff"]), int(p["comb_lines"]))

    def tx_config(self, n_symbols: Optional[int] = None) -> TxConfig:
        t = self.config["transmitter"]
        sup = t["suppression_db"]
        return TxConfig(
            formats=tuple(t["formats"]), rate_baud=float(t["rate_baud"]), pulse=self.pulse(),
            n_symbols=int(n_symbols or t["n_symbols"]), sample_rate_hz=float(t["sample_rate_hz"]),
            carrier_spacing_hz=2 * float(self.config["aggregation"]["rf_freq_hz"]),
            carrier_mod_index=float(t["carrier_mod_index"]),
            carrier_phase_rad=float(t["carrier_phase_rad"]),
            suppression_db=math.inf if sup is None else float(sup),
            decorrelation=t["decorrelation"],
            seeds=(stage_seed(self.seed, "data1"), stage_seed(self.seed, "data2")),
            block_residual=bool(t["block_residual"]), center_freq_hz=float(t["center_freq_hz"]))

    def mzm(self) -> MzmParams:
        a = self.config["aggregation"]
        er = a["extinction_ratio_db"]
        return MzmParams(float(a["v_pi"]), float(a["bias_v"]), math.inf if er is None else float(er))

    def rf(self) -> RfDrive:
        a = self.config["aggregation"]
        return RfDrive(float(a["rf_freq_hz"]), float(a["mod_index"]))

    def channel_bandwidth_hz(self) -> float:
        return self.pulse().occupied_bandwidth(float(self.config["transmitter"]["rate_baud"]))

    def select_bandwidth_hz(self) -> float:
        v = self.config["aggregation"]["select_bandwidth_hz"]
        return self.channel_bandwidth_hz() if v is None else float(v)

    def rx_bandwidth_hz(self) -> float:
        v = self.config["receiver"]["lowpass_bw_hz"]
        return self.channel_bandwidth_hz() if v is None else float(v)

    def rx_config(self, channel_offset_hz: float) -> RxConfig:
        r = self.config["receiver"]
        return RxConfig(self.rx_bandwidth_hz(), r["mode"], float(r["lo_offset_hz"]),
                        int(r["samples_per_symbol_out"]), channel_offset_hz,
                        float(self.config["transmitter"]["rate_baud"]))

    def dispersion(self) -> Optional[DispersionSpec]:
        d = float(self.config["transmitter"]["dispersion_ps_per_nm"])
        return DispersionSpec(d) if d else None

    def ase_bpf_limit_hz(self) -> float:
        """Widest noise band ahead of MZM-2 whose sidebands stay inside the grid.

        Capped at the 375 GHz default; on a 640 GS/s grid with an 18 GHz
        drive it is 242 GHz.
        """
        fs = float(self.config["transmitter"]["sample_rate_hz"])
        a = self.config["aggregation"]
        n_max = max(significant_order(float(a["mod_index"])), 1)
        room = fs / 2 - n_max * float(a["rf_freq_hz"])
        return min(DEFAULT_ASE_BPF_HZ, 2e9 * (math.floor(room / 1e9) - 1))

    def ase_spec(self, key: str, stage: str) -> Optional[AseNoiseSpec]:
        a = self.config["link"][key]
        if a is None:
            return None
        default = DEFAULT_ASE_BPF_HZ if key == "ase_after_aggregation" else self.ase_bpf_limit_hz()
        bpf = float(a.get("bpf_bandwidth_hz", default))
        seed = stage_seed(self.seed, stage)
        if "target_evm_pct" in a:
            return AseNoiseSpec(target_parent_evm_pct=float(a["target_evm_pct"]), bpf_bandwidth_hz=bpf, seed=seed)
        return AseNoiseSpec(noise_psd=float(a["noise_psd"]), bpf_bandwidth_hz=bpf, seed=seed)

    def _check_semantics(self) -> None:
        c, text = self.config, self.source_text
        t, a, r = c["transmitter"], c["aggregation"], c["receiver"]
        fs, rate = float(t["sample_rate_hz"]), float(t["rate_baud"])
        sps = fs / rate
        if abs(sps - round(sps)) > 1e-9:
            raise _err(f"sample rate {fs:g} Hz is not an integer multiple of {rate:g} Bd",
                       ["transmitter", "rate_baud"], text)
        p = t["pulse"]
        if p.get("comb_lines", 3) % 2 == 0:
            raise _err("comb_lines must be odd", ["transmitter", "pulse", "comb_lines"], text)
        bw = self.channel_bandwidth_hz()
        f_m = float(a["rf_freq_hz"])
        window = int(t["n_symbols"]) / rate
        if abs(f_m * window - round(f_m * window)) > 1e-6:
            raise _err(f"{f_m:g} Hz does not complete an integer number of cycles in the "
                       f"{window:g} s window of n_symbols/rate_baud", ["aggregation", "rf_freq_hz"], text)
        n_max = max(significant_order(float(a["mod_index"])), 1)
        reach = f_m + n_max * f_m + bw / 2
        if reach >= fs / 2:
            raise _err(f"sideband order {n_max} reaches {reach:g} Hz, beyond the {fs / 2:g} Hz Nyquist "
                       f"limit of the grid", ["aggregation", "mod_index"], text)
        for key, sec in (("lowpass_bw_hz", "receiver"), ("select_bandwidth_hz", "aggregation")):
            v = c[sec][key]
            if v is not None and float(v) > fs:
                raise _err(f"bandwidth {float(v):g} Hz exceeds the {fs:g} Hz grid", [sec, key], text)
        if r["mode"] == "heterodyne":
            lo = float(r["lo_offset_hz"])
            if lo == 0 or abs(lo) < self.rx_bandwidth_hz() / 2:
                raise _err("heterodyne needs |lo_offset_hz| >= half the receive bandwidth "
                           "(image-free band)", ["receiver", "lo_offset_hz"], text)
            if 2 * abs(lo) + self.rx_bandwidth_hz() / 2 >= fs / 2:
                raise _err("IF too high for the grid", ["receiver", "lo_offset_hz"], text)
        for key in ("ase_after_tx", "ase_after_aggregation"):
            n = c["link"][key]
            if n is None or "bpf_bandwidth_hz" not in n:
                continue
            bpf = float(n["bpf_bandwidth_hz"])
            if bpf > fs:
                raise _err("ASE filter is wider than the grid", ["link", key, "bpf_bandwidth_hz"], text)
            if key == "ase_after_tx" and bpf > self.ase_bpf_limit_hz():
                raise _err(f"noise band {bpf:g} Hz ahead of MZM-2 would alias its sidebands; at most "
                           f"{self.ase_bpf_limit_hz():g} Hz fits this grid", ["link", key, "bpf_bandwidth_hz"],
                           text)
            if bpf < self.rx_bandwidth_hz():
                raise _err("ASE filter is narrower than the receive band", ["link", key, "bpf_bandwidth_hz"],
                           text)
        f1, f2 = t["formats"]
        if t["decorrelation"] == "shared_data" and f1 != f2:
            raise _err("shared_data needs identical parent formats", ["transmitter", "decorrelation"], text)
        if isinstance(a["phi_rad"], str):
            alpha = c["link"]["alpha"]
            if solve_for_target(f1, f2, a["target"], alpha) is None:
                w = closest_prediction(f1, f2, a["target"], alpha)
                raise _err(f"{f1}+{f2} cannot form {a['target']} (closest: {w['n_points']} points "
                           f"at alpha={w['alpha']:g}, rel={w['rel_phase_rad']:.4f} rad)",
                           ["aggregation", "target"], text)


@dataclass(frozen=True, eq=False)
class Chain:
    """Everything upstream of MZM-2, built once per scenario realisation."""

    scenario: Scenario
    parents: ParentChannels
    weighted: ComplexEnvelope
    carriers: ComplexEnvelope
    plan: AggregationPlan
    weight: WeightPlan


def build_chain(scn: Scenario, n_symbols: Optional[int] = None, alpha: Optional[float] = None) -> Chain:
    """Parents, waveshaper weight, dispersion; plus the matching CW carriers.

    ``alpha`` defaults to the configured (or solved) weight.
    """
    cfg = scn.tx_config(n_symbols)
    parents = build_parent_channels(cfg)
    cw = build_parent_channels(cfg, unmodulated=True)
    c1, c2 = cfg.carrier_offsets_hz
    f_m = scn.rf().freq_hz
    if alpha is None:
        alpha = resolve_alpha(scn)
    w = WeightPlan(alpha, (c2 - f_m, c2 + f_m))
    x, xc = apply_weight(parents.envelope, w), apply_weight(cw.envelope, w)
    d = scn.dispersion()
    if d is not None:
        x, xc = apply_dispersion(x, d), apply_dispersion(xc, d)
    band = FilterSpec("brickwall_bandpass", scn.select_bandwidth_hz(), 0.5 * (c1 + c2))
    plan = AggregationPlan(c1, c2, scn.rf(), band, scn.mzm(), alpha)
    return Chain(scn, parents, x, xc, plan, w)


def resolve_alpha(scn: Scenario) -> float:
    a = scn.config["link"]["alpha"]
    if a is not None:
        return float(a)
    f1, f2 = scn.config["transmitter"]["formats"]
    sol = solve_for_target(f1, f2, scn.config["aggregation"]["target"])
    return 1.0 if sol is None else sol[0]


def target_relative_phase(scn: Scenario, alpha: float) -> Optional[float]:
    f1, f2 = scn.config["transmitter"]["formats"]
    sol = solve_for_target(f1, f2, scn.config["aggregation"]["target"], alpha)
    return None if sol is None else sol[1]


@dataclass(frozen=True, eq=False)
class RunResult:
    scenario: Scenario
    chain: Chain
    plan: AggregationPlan
    calibration: CwCalibration
    alpha: float
    rel_phase_rad: Optional[float]
    report: ConstellationReport
    parent_report: Optional[ConstellationReport]
    mzm_output: ComplexEnvelope
    aggregated: ComplexEnvelope
    received: ComplexEnvelope
    noisy_input: ComplexEnvelope
    mapping_bijective: bool
    spectrum_out_of_band_db: float
    diagnostics: dict = field(default_factory=dict)
    tune: Optional[object] = None

    def metrics(self) -> dict:
        m = {
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "alpha": self.alpha,
            "phi_rad": self.plan.phi_rad,
            "theta0_rad": self.calibration.theta0_rad,
            "alpha_eff": self.calibration.alpha_eff,
            "target_rel_phase_rad": self.rel_phase_rad,
            "mapping_bijective": self.mapping_bijective,
            "spectrum_out_of_band_db": _finite(self.spectrum_out_of_band_db),
            "aggregate": self.report.metrics(),
        }
        if self.parent_report is not None:
            m["parent"] = self.parent_report.metrics()
        if self.tune is not None:
            m["tune"] = {"phi_star_rad": self.tune.phi_star_rad, "alpha_star": self.tune.alpha_star,
                         "evm_at_opt_pct": self.tune.evm_at_opt_pct, "converged": self.tune.converged}
        return m


def _finite(v):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _snap_geometry(scn: Scenario, alpha: float, rel: float):
    """Ideal (alpha, rel) nearest to the realised one that forms the target.

    Tuned settings sit a hair off the ideal lattice; decisions are mapped
    through the nearest ideal geometry within 0.05 in alpha and 5 degrees.
    """
    f1, f2 = scn.config["transmitter"]["formats"]
    target = scn.config["aggregation"]["target"]
    sol = solve_for_target(f1, f2, target, None, (min(alpha, 1.0), 1.0))
    alphas = [alpha]
    for a in (1.0, 0.5, 0.25) + ((sol[0],) if sol else ()):
        if abs(a - alpha) <= 0.05:
            alphas.append(a)
    best = None
    for a in alphas:
        for k in range(16):
            cand = k * math.pi / 8
            d = abs((rel - cand + math.pi) % (2 * math.pi) - math.pi)
            if d <= math.radians(5) and (best is None or d < best[0]):
                if realizes(predict_format(f1, f2, a, cand), target):
                    best = (d, a, cand)
    return (best[1], best[2]) if best else (alpha, rel)


def _reference(scn: Scenario, chain: Chain, alpha: float, rel: float):
    """Target indices the transmitted pairs should decode to, or None."""
    f1, f2 = scn.config["transmitter"]["formats"]
    target = scn.config["aggregation"]["target"]
    a, r = _snap_geometry(scn, alpha, rel)
    pred = predict_format(f1, f2, a, r)
    if not realizes(pred, target):
        return None, r, False
    _, _, mapping = alignment_to(pred, target)
    i1, i2 = (s.indices for s in chain.parents.streams)
    return mapping[pred.point_of(i1, i2)], r, True


def run_scenario(scn: Scenario, phi_rad=None, alpha: Optional[float] = None) -> RunResult:
    """Execute the full chain: transmitter, link, MZM-2, receiver, metrology.

    ``phi_rad`` / ``alpha`` override the config (used by sweeps).
    """
    agg_cfg = scn.config["aggregation"]
    phi_mode = agg_cfg["phi_rad"] if phi_rad is None else phi_rad
    tune_result = None
    if phi_mode == "tune":
        from .tuner import TuneSpec, tune

        lo_hi = (alpha, alpha) if alpha is not None else (
            (scn.config["link"]["alpha"],) * 2 if scn.config["link"]["alpha"] is not None else (0.1, 1.0))
        tune_result = tune(scn, TuneSpec(agg_cfg["target"], alpha_bounds=lo_hi))
        alpha = tune_result.alpha_star
    if alpha is None:
        alpha = resolve_alpha(scn)
    chain = build_chain(scn, alpha=alpha)
    cal = calibrate_cw(chain.carriers, chain.plan)
    rel = target_relative_phase(scn, alpha)
    if rel is None:
        # Off-design weight (alpha sweeps): keep the nominal geometry's phase.
        rel = target_relative_phase(scn, resolve_alpha(scn))
    if phi_mode == "auto":
        if rel is None:
            raise ConfigError(f"alpha={alpha:g} cannot form {agg_cfg['target']}", field="link.alpha")
        phi = phi_for_relative_phase(rel, cal.theta0_rad)
    elif phi_mode == "tune":
        phi = tune_result.phi_star_rad
    else:
        phi = float(phi_mode)
    plan = replace(chain.plan, phi_rad=float(phi), theta0_rad=cal.theta0_rad)
    # The relative phase actually produced decides the reference mapping.
    actual_rel = float((2 * phi + cal.theta0_rad) % (2 * math.pi))

    pulse = scn.pulse()
    rate = float(scn.config["transmitter"]["rate_baud"])
    pf = pulse.power_factor()
    bw_rx = scn.rx_bandwidth_hz()
    x = chain.weighted
    ase_tx = scn.ase_spec("ase_after_tx", "ase_tx")
    if ase_tx is not None:
        x = apply_ase(x, ase_tx, NoiseReference(1.0 / pf, bw_rx))

    mzm_out = mzm_modulate(x, plan.mzm, plan.rf.with_phase(plan.phi_rad))
    agg = aggregate(x, plan)
    ase_agg = scn.ase_spec("ase_after_aggregation", "ase_agg")
    if ase_agg is not None:
        clean = aggregate(chain.weighted, plan)
        agg = apply_ase(agg, ase_agg, NoiseReference(clean.power_mw / pf, bw_rx))

    rx = receive(agg, scn.rx_config(plan.superposition_offset_hz))
    ref, rel_for_ref, bijective_geom = _reference(scn, chain, alpha, actual_rel)
    n_blocks = int(scn.config["receiver"]["n_blocks"])
    report = recover_symbols(rx, agg_cfg["target"], rate, pulse, reference=ref, n_blocks=n_blocks)
    bijective = bool(bijective_geom and report.ser == 0.0)

    parent_report = None
    if scn.config["outputs"]["parent_report"]:
        prx = receive(x, scn.rx_config(plan.carrier1_offset_hz))
        s1 = chain.parents.streams[0]
        parent_report = recover_symbols(prx, s1.format, rate, pulse, reference=s1.indices, n_blocks=n_blocks)

    diag = {}
    if scn.config["outputs"]["diagnostics"]:
        diag = diagnostics(chain.weighted, plan, chain.parents.channel_bandwidth_hz, cal)
        diag["leakage_rel_db"] = _finite(diag["leakage_rel_db"])
    clean_out = mzm_out if ase_tx is None else mzm_modulate(chain.weighted, plan.mzm,
                                                            plan.rf.with_phase(plan.phi_rad))
    oob = spectrum_support(clean_out, chain.parents.carrier_offsets_hz, plan.rf.freq_hz,
                           chain.parents.channel_bandwidth_hz)
    return RunResult(scn, chain, plan, cal, float(alpha), rel_for_ref, report, parent_report, mzm_out, agg,
                     rx, x, bijective, oob, diag, tune_result)


def golden_names() -> list:
    files = resources.files("optagg").joinpath("golden").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def golden_text(name: str) -> str:
    f = resources.files("optagg").joinpath("golden", f"{name}.json")
    if not f.is_file():
        raise ConfigError(f"no golden scenario named {name!r}; try one of {', '.join(golden_names())}")
    return f.read_text(encoding="utf-8")


def load_golden(name: str) -> Scenario:
    return Scenario.from_json(golden_text(name))


def back_to_back(format, rate_baud: float, pulse: PulseShape, n_symbols: int, target_evm_pct: float,
                 seed: int = 1, sample_rate_hz: float = 640e9, n_blocks: int = 10) -> ConstellationReport:
    """Single parent channel at baseband with calibrated ASE, straight into the receiver.

    Uses the same seed split as full scenarios (data from stage 0, noise
    from stage 2).
    """
    from .transmitter import generate_symbols, shape_pulses

    s = generate_symbols(format, n_symbols, stage_seed(seed, "data1"), rate_baud)
    x = shape_pulses(s, pulse, sample_rate_hz)
    x = x.scaled(1.0 / math.sqrt(x.power_mw))
    bw = pulse.occupied_bandwidth(rate_baud)
    spec = AseNoiseSpec(target_parent_evm_pct=target_evm_pct, seed=stage_seed(seed, "ase_tx"))
    y = apply_ase(x, spec, NoiseReference(1.0 / pulse.power_factor(), bw))
    z = receive(y, RxConfig(bw, rate_baud=rate_baud))
    return recover_symbols(z, s.format, rate_baud, pulse, reference=s.indices, n_blocks=n_blocks)
