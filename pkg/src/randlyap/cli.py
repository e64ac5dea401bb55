"""Experiment runner: flat key=value configs, seeded dispatch, CSV/SVG output, run manifests.

Usage::

    randlyap oy-ftle --seed 7 --T 100000 --epsilon 0 --out runs/det
    randlyap fig8 --dist doubling --v 0,1 --steps 100000
    randlyap spectrum --system twist --n 5000
    randlyap diagnose --input runs/det/ftle.csv

Exit status: 0 on success, 1 for configuration errors, 2 for numeric or
runtime failures.
"""

import argparse
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .core import NoiseWord, NoisyTwistMap, mean_log_det, qr_spectrum
from .figure8 import Fig8InvariantError, GgsParams, fig8_lyapunov_run, slln_diagnostic
from .noise import BoxIndexDist, DoublingLaw, RngStream, UniformCubeNoise, parse_seed
from .ottyorke import FlowParams, FtleSeries, OttYorkeRandomMap, SquarePoint, record_mask, run_oy_experiment, tan_transform
from .rkf45 import IntegrationError

OUT_ENV = "RANDLYAP_OUT"
EXPERIMENTS = ("oy-ftle", "fig8", "spectrum", "diagnose")

_COMMON = {
    "experiment": None,
    "seed": "0",
    "trajectory_id": "0",
    "out": None,
    "decimation": "auto",
    "plot": "false",
}
_KEYS = {
    "oy-ftle": {"a": "0.03", "epsilon": "1e-4", "h": "0.001", "T": "10000", "x0": f"{(3 + math.pi) / 2!r},{(3 + math.pi) / 2!r}"},
    "fig8": {
        "kappa": "2", "a": "1.2", "b": "1.4", "n0": "2", "k0": "2", "n1": "3",
        "dist": "geometric", "q": "0.5", "weights": "", "dist_n0": "", "v": "0,1", "steps": "100000",
    },
    "spectrum": {"system": "twist", "n": "2000", "c": "0.3", "d": "0.2", "r": "0.8", "eps": "0.05",
                 "a": "0.03", "epsilon": "1e-4", "h": "0.001", "x0": "1.0,2.0"},
    "diagnose": {"target": "amplitude", "input": "", "decades": "", "q": "0.5", "dist_n0": "2", "N": "100000"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    trajectory_id: int
    output_dir: Path
    decimation: str
    plot: bool
    params: object = None
    dist: object = None
    extra: Dict[str, object] = field(default_factory=dict)
    raw: Dict[str, str] = field(default_factory=dict)


@dataclass
class WindowStats:
    window_lo: np.ndarray
    window_hi: np.ndarray
    sup: np.ndarray
    inf: np.ndarray
    excluded: int = 0

    @property
    def amplitude(self) -> np.ndarray:
        return self.sup - self.inf

    def amplitude_for(self, lo, hi) -> float:
        for i in range(self.window_lo.size):
            if self.window_lo[i] == lo and self.window_hi[i] == hi:
                return float(self.amplitude[i])
        raise KeyError((lo, hi))


# key = value files -------------------------------------------------------


def read_kv(path) -> Dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(path, entries: Dict[str, object]):
    lines = [f"{k} = {v}" for k, v in entries.items()]
    _atomic_write(Path(path), "\n".join(lines) + "\n")


# parsing -----------------------------------------------------------------


def _pair(key, text):
    try:
        parts = [float(s) for s in text.split(",")]
    except ValueError:
        parts = []
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected two comma-separated numbers, got {text!r}")
    return parts


def _num(key, text, kind=float):
    try:
        if kind is int:
            v = float(text)
            if not v.is_integer():
                raise ValueError
            return int(v)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a valid {kind.__name__}: {text!r}") from None


def _bool(key, text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"{key}: not a boolean: {text!r}")


def _make_dist(kv, n0_default):
    kind = kv.get("dist", "geometric")
    n0 = _num("dist_n0", kv["dist_n0"], int) if kv.get("dist_n0") else n0_default
    try:
        if kind == "geometric":
            return BoxIndexDist.geometric(_num("q", kv["q"]), n0)
        if kind == "explicit":
            w = [float(s) for s in kv.get("weights", "").split(",") if s.strip()]
            return BoxIndexDist.explicit(w, n0)
        if kind == "doubling":
            return DoublingLaw(n0)
    except ValueError as exc:
        raise ConfigError(f"dist: {exc}") from None
    raise ConfigError(f"dist: unknown law {kind!r} (geometric, explicit, doubling)")


def parse_config(flags: Optional[Dict[str, Optional[str]]] = None, config_file=None) -> ExperimentConfig:
    """Merge file values and flag overrides, then validate.

    ``flags`` maps keys to strings; ``None`` values are ignored. Keys starting
    with ``manifest.`` are run records, not inputs, and are skipped so a
    manifest can be fed back as a config.
    """
    kv: Dict[str, str] = {}
    if config_file is not None:
        try:
            kv.update({k: v for k, v in read_kv(config_file).items() if not k.startswith("manifest.")})
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_file}: {exc}") from None
    kv.update({k: str(v) for k, v in (flags or {}).items() if v is not None})
    exp = kv.get("experiment")
    if exp is None:
        raise ConfigError("experiment: required key missing")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown experiment {exp!r}")
    allowed = {**_COMMON, **_KEYS[exp]}
    for k in kv:
        if k not in allowed:
            raise ConfigError(f"{k}: unknown key for {exp}")
    full = {k: (kv[k] if k in kv else v) for k, v in allowed.items()}

    try:
        seed = parse_seed(full["seed"])
    except ValueError as exc:
        raise ConfigError(f"seed: {exc}") from None
    tid = _num("trajectory_id", full["trajectory_id"], int)
    if tid < 0:
        raise ConfigError("trajectory_id: must be >= 0")
    out = full["out"] or os.environ.get(OUT_ENV) or "randlyap-out"
    full["out"] = out
    decimation = full["decimation"]
    if decimation not in ("auto", "none", "geometric"):
        raise ConfigError(f"decimation: unknown policy {decimation!r}")
    cfg = ExperimentConfig(exp, seed, tid, Path(out), decimation, _bool("plot", full["plot"]), raw=full)

    try:
        if exp == "oy-ftle":
            cfg.params = FlowParams(
                a=_num("a", full["a"]),
                epsilon=_num("epsilon", full["epsilon"]),
                h=_num("h", full["h"]),
                T=_num("T", full["T"], int),
                x0=SquarePoint(*_pair("x0", full["x0"])),
                decimation=decimation,
            )
        elif exp == "fig8":
            cfg.params = GgsParams(
                kappa=_num("kappa", full["kappa"]), a=_num("a", full["a"]), b=_num("b", full["b"]),
                n0=_num("n0", full["n0"], int), k0=_num("k0", full["k0"], int),
            )
            cfg.dist = _make_dist(full, cfg.params.n0)
            if cfg.dist.n0 < cfg.params.n0:
                raise ConfigError(f"dist_n0: must be >= n0={cfg.params.n0}")
            n1 = _num("n1", full["n1"], int)
            if n1 < cfg.params.n0:
                raise ConfigError(f"n1: must be >= n0={cfg.params.n0}")
            v = _pair("v", full["v"])
            if v == [0.0, 0.0]:
                raise ConfigError("v: tangent vector must be nonzero")
            steps = _num("steps", full["steps"], int)
            if steps < 0:
                raise ConfigError("steps: must be >= 0")
            cfg.extra = {"n1": n1, "v": v, "steps": steps}
        elif exp == "spectrum":
            system = full["system"]
            n = _num("n", full["n"], int)
            if n < 1:
                raise ConfigError("n: must be >= 1")
            if system == "twist":
                cfg.params = NoisyTwistMap(
                    c=_num("c", full["c"]), d=_num("d", full["d"]), r=_num("r", full["r"]), eps=_num("eps", full["eps"])
                )
                x0 = _pair("x0", full["x0"])
            elif system == "oy":
                fp = FlowParams(a=_num("a", full["a"]), epsilon=_num("epsilon", full["epsilon"]), h=_num("h", full["h"]))
                cfg.params = OttYorkeRandomMap(fp.a, fp.epsilon, fp.h)
                x0 = list(tan_transform(_pair("x0", full["x0"])))
            else:
                raise ConfigError(f"system: unknown system {system!r} (twist, oy)")
            cfg.extra = {"n": n, "x0": x0, "system": system}
        else:
            target = full["target"]
            if target == "amplitude":
                if not full["input"]:
                    raise ConfigError("input: required for target=amplitude")
                decades = None
                if full["decades"]:
                    decades = [int(x) for x in _pair("decades", full["decades"])]
                cfg.extra = {"target": target, "input": Path(full["input"]), "decades": decades}
            elif target == "slln":
                cfg.dist = _make_dist({**full, "dist": "geometric"}, 2)
                N = _num("N", full["N"], int)
                if N < 1:
                    raise ConfigError("N: must be >= 1")
                cfg.extra = {"target": target, "N": N}
            else:
                raise ConfigError(f"target: unknown diagnostic {target!r} (amplitude, slln)")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


# series I/O --------------------------------------------------------------


def _fmt(x) -> str:
    x = float(x)
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "inf"
    return repr(x)


def write_table(path, header: List[str], columns: List[np.ndarray], int_cols=()):
    rows = [",".join(header)]
    n = len(columns[0]) if columns else 0
    for i in range(n):
        rows.append(",".join(str(int(c[i])) if j in int_cols else _fmt(c[i]) for j, c in enumerate(columns)))
    try:
        _atomic_write(Path(path), "\n".join(rows) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_csv(series: FtleSeries, path):
    write_table(path, ["t", "lambda"], [series.t, series.lam], int_cols=(0,))


def read_csv(path) -> FtleSeries:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n")
    if lines[0] != "t,lambda":
        raise ValueError(f"{path}: expected header 't,lambda', got {lines[0]!r}")
    t, lam = [], []
    for line in lines[1:]:
        if not line:
            continue
        a, b = line.split(",")
        t.append(int(a))
        lam.append(float(b))
    return FtleSeries(np.array(t, dtype=np.int64), np.array(lam))


def write_window_csv(stats: WindowStats, path):
    write_table(
        path,
        ["window_lo", "window_hi", "sup", "inf", "amplitude"],
        [stats.window_lo, stats.window_hi, stats.sup, stats.inf, stats.amplitude],
        int_cols=(0, 1),
    )


def emit_svg(series: FtleSeries, path, width=800, height=400, title="lambda(t)"):
    """Single polyline on a log-time axis; ``-inf`` and ``t <= 0`` entries are left out."""
    ok = np.isfinite(series.lam) & (series.t > 0)
    t = series.t[ok].astype(float)
    y = series.lam[ok]
    pad = 40
    pts = ""
    if t.size:
        lx = np.log10(t)
        x0, x1 = lx.min(), lx.max()
        y0, y1 = y.min(), y.max()
        sx = (width - 2 * pad) / (x1 - x0 if x1 > x0 else 1.0)
        sy = (height - 2 * pad) / (y1 - y0 if y1 > y0 else 1.0)
        px = pad + (lx - x0) * sx
        py = height - pad - (y - y0) * sy
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
        f"<title>{title}</title>\n"
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="gray"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="gray"/>\n'
        f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>\n'
        "</svg>\n"
    )
    try:
        _atomic_write(Path(path), svg)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# diagnostics -------------------------------------------------------------


def oscillation_amplitude(series: FtleSeries, decades=None) -> WindowStats:
    """Sup, inf and amplitude of ``lambda`` over decades ``[10^d, 10^(d+1))``.

    ``decades`` is ``(d_lo, d_hi)``, giving windows for ``d_lo <= d < d_hi``;
    by default every decade touched by the series. Windows with no finite
    entry report NaN. ``-inf`` entries are excluded and counted.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    finite = ~np.isneginf(series.lam)
    excluded = int(np.sum(~finite))
    t = series.t[finite]
    lam = series.lam[finite]
    if decades is None:
        pos = t[t > 0]
        if pos.size == 0:
            raise ValueError("no positive times with finite values")
        d_lo = int(math.floor(math.log10(pos.min())))
        d_hi = int(math.floor(math.log10(pos.max()))) + 1
    else:
        d_lo, d_hi = int(decades[0]), int(decades[1])
    lo, hi, sup, inf = [], [], [], []
    for d in range(d_lo, d_hi):
        a, b = 10**d, 10 ** (d + 1)
        sel = lam[(t >= a) & (t < b)]
        lo.append(a)
        hi.append(b)
        if sel.size:
            sup.append(float(sel.max()))
            inf.append(float(sel.min()))
        else:
            sup.append(math.nan)
            inf.append(math.nan)
    return WindowStats(np.array(lo, dtype=np.int64), np.array(hi, dtype=np.int64), np.array(sup), np.array(inf), excluded)


# running -----------------------------------------------------------------


def _decimate(series: FtleSeries, policy: str, T: int) -> FtleSeries:
    if len(series) == 0:
        return series
    mask = record_mask(0, len(series), T, policy)
    out = FtleSeries(series.t[mask], series.lam[mask])
    out.diagnostics = series.diagnostics
    return out


def run(cfg: ExperimentConfig) -> Dict[str, object]:
    """Run one experiment, write its files and the manifest; returns the manifest entries."""
    started = time.time()
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    stream = RngStream(cfg.seed, cfg.trajectory_id)
    files: List[str] = []
    summary: Dict[str, object] = {}

    def artifact(name):
        files.append(name)
        return out / name

    if cfg.experiment == "oy-ftle":
        series = run_oy_experiment(cfg.params, stream)
        write_csv(series, artifact("ftle.csv"))
        if len(series):
            stats = oscillation_amplitude(series)
            write_window_csv(stats, artifact("windows.csv"))
            summary["final_lambda"] = _fmt(series.lam[-1])
        summary["nudges"] = series.diagnostics["nudges"]
        summary["neg_inf"] = series.diagnostics["neg_inf"]
        summary["backend"] = series.diagnostics["backend"]
    elif cfg.experiment == "fig8":
        steps = cfg.extra["steps"]
        series = fig8_lyapunov_run(cfg.params, cfg.dist, cfg.extra["v"], steps, stream, cfg.extra["n1"])
        rt = series.diagnostics["return_times"]
        idx = series.diagnostics["indices"]
        series = _decimate(series, cfg.decimation, steps)
        write_csv(series, artifact("fig8.csv"))
        write_table(artifact("returns.csv"), ["k", "N", "index"], [np.arange(1, rt.size + 1), rt, idx], int_cols=(0, 1, 2))
        summary["returns"] = int(rt.size)
        if len(series):
            summary["final_lambda"] = _fmt(series.lam[-1])
        summary["backend"] = series.diagnostics["backend"]
    elif cfg.experiment == "spectrum":
        sys_ = cfg.params
        n = cfg.extra["n"]
        word = NoiseWord(UniformCubeNoise(1.0, sys_.noise_dim).draw(stream, n))
        x0 = np.array(cfg.extra["x0"], dtype=float)
        l1, l2 = qr_spectrum(sys_, word, x0, n)
        mld = mean_log_det(sys_, word, x0, n)
        write_table(artifact("spectrum.csv"), ["index", "lambda"], [np.array([1, 2]), np.array([l1, l2])], int_cols=(0,))
        summary.update(lambda1=_fmt(l1), lambda2=_fmt(l2), mean_log_det=_fmt(mld), sum_rule_residual=_fmt(l1 + l2 - mld))
        series = None
    else:
        series = None
        if cfg.extra["target"] == "amplitude":
            src = read_csv(cfg.extra["input"])
            stats = oscillation_amplitude(src, cfg.extra["decades"])
            write_window_csv(stats, artifact("windows.csv"))
            summary["excluded_neg_inf"] = stats.excluded
        else:
            n, ratio = slln_diagnostic(cfg.dist, stream, cfg.extra["N"])
            write_table(artifact("slln.csv"), ["n", "ratio"], [n, ratio], int_cols=(0,))
            half = n >= cfg.extra["N"] // 2
            summary["max_ratio_second_half"] = _fmt(ratio[half].max())

    if cfg.plot and series is not None and len(series):
        emit_svg(series, artifact(Path(files[0]).stem + ".svg"))

    entries: Dict[str, object] = dict(cfg.raw)
    entries["manifest.version"] = __version__
    entries["manifest.stream_counter_end"] = stream.counter
    entries["manifest.start"] = f"{started:.3f}"
    entries["manifest.end"] = f"{time.time():.3f}"
    entries["manifest.files"] = ",".join(files)
    for k, v in summary.items():
        entries[f"manifest.summary.{k}"] = v
    write_manifest(out / "manifest.txt", entries)
    return entries


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randlyap", description="Lyapunov experiments for random dynamical systems")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="experiment", required=True)
    for exp in EXPERIMENTS:
        sp = sub.add_parser(exp)
        sp.add_argument("--config", default=None, help="flat key = value file; flags override it")
        for key in list(_COMMON)[1:] + list(_KEYS[exp]):
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    flags = {k: v for k, v in vars(ns).items() if k != "config"}
    try:
        cfg = parse_config(flags, ns.config)
    except ConfigError as exc:
        print(f"randlyap: config error: {exc}", file=sys.stderr)
        return 1
    try:
        entries = run(cfg)
    except ConfigError as exc:
        print(f"randlyap: config error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, IntegrationError, Fig8InvariantError, ValueError, OSError) as exc:
        print(f"randlyap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {entries['manifest.files']} and manifest.txt to {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
