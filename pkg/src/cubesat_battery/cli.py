"""Batch command-line frontend.

Every command reads a JSON config (``--config``) whose values are overridden
by command-line flags, writes into ``--out``, and leaves nothing behind when
it fails.
"""
import argparse
import glob
import json
import os
import shutil
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .ecm import EcmFitOptions, EcmParams, fit_ecm, predict_voltage
from .errors import ConfigurationError, DischargeModelError, EmptyInputError
from .evaluation import (LsbErrorReport, compare_models, ecm_predictor, infer_lsb, lsb_errors,
                         ml_predictor, sensitivity_sweep, voltage_sweep)
from .plots import histogram_svg, sweep_svg
from .regpath import (ExtrapolationWarning, PipelineConfig, RegressionModel,
                      dataset_from_segments, fit_pipeline, predict, split_indices)
from .synth import DEFAULT_PARAMS, gen_curve_set
from .telemetry import (ANOMALOUS_DATES, OutlierPolicy, Schema, SegmentPolicy,
                        date_tag_from_name, extract_discharge_segments, filter_segments,
                        parse_telemetry, read_segments, select_dates, summarize,
                        write_segments, write_telemetry)


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)
    schema: dict = field(default_factory=dict)
    segment_policy: dict = field(default_factory=dict)
    outlier_policy: dict = field(default_factory=dict)
    ecm: dict = field(default_factory=dict)
    ecm_curves: str = "all"
    ecm_filtered: bool = True
    ml: dict = field(default_factory=dict)
    lsb: float = None
    predicted_decimals: int = None
    sweep_temperature: float = 5.0
    sweep_dod: str = "0:200:20"
    sweep_current: str = "10:1190:10"
    delta_i: float = 1.0
    output: str = "out"
    seed: int = 42

    @classmethod
    def load(cls, path=None, overrides=None):
        data = {}
        if path:
            data = json.loads(Path(path).read_text())
            unknown = set(data) - {f.name for f in fields(cls)}
            if unknown:
                raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls(**data)

    def segment(self):
        return SegmentPolicy(**self.segment_policy)

    def outliers(self):
        return OutlierPolicy(**self.outlier_policy)

    def pipeline(self):
        return PipelineConfig(**{"seed": self.seed, **self.ml})

    def ecm_options(self):
        return EcmFitOptions(**self.ecm)


class Outputs:
    """Stage files in a scratch directory and move them into place on success."""

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        if not os.access(self.out, os.W_OK):
            raise ConfigurationError(f"output directory {self.out} is not writable")
        self.stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out))
        self.written = []

    def write(self, name, text):
        (self.stage / name).write_text(text)
        self.written.append(name)

    def commit(self):
        for name in self.written:
            os.replace(self.stage / name, self.out / name)
        shutil.rmtree(self.stage, ignore_errors=True)

    def discard(self):
        shutil.rmtree(self.stage, ignore_errors=True)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.commit()
        else:
            self.discard()
        return False


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _range(text):
    """``start:stop:step`` with ``stop`` inclusive, or a comma list."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ConfigurationError(f"step must be positive in {text!r}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    return np.array([float(v) for v in text.split(",")])


def _expand_inputs(patterns):
    files = sorted({p for pat in patterns for p in (glob.glob(pat) or ([pat] if os.path.isfile(pat) else []))})
    if not files:
        raise EmptyInputError("no input files matched " + (", ".join(patterns) or "(none given)"))
    return files


# --- ingest -----------------------------------------------------------------

def cmd_ingest(cfg):
    schema = Schema.from_dict(cfg.schema) if cfg.schema else Schema()
    samples, parse_rejects, inputs = [], [], []
    for path in _expand_inputs(cfg.inputs):
        tag = date_tag_from_name(Path(path).name) or Path(path).stem
        try:
            res = parse_telemetry(Path(path).read_bytes(), schema, source_date=tag)
        except DischargeModelError as exc:
            raise type(exc)(f"{path}: {exc}") from exc
        samples.extend(res.samples)
        parse_rejects.extend({"file": path, "line": r.line, "reason": r.reason} for r in res.rejects)
        inputs.append({"path": path, "source_date": tag, "samples": len(res.samples),
                       "rejected_rows": len(res.rejects)})
    seg_policy, out_policy = cfg.segment(), cfg.outliers()
    segments = extract_discharge_segments(samples, seg_policy)
    typical, outliers = filter_segments(segments, out_policy)
    n_discharge = sum(len(s) for s in segments)
    all_csv, all_entries = write_segments(segments, schema)
    typ_csv, typ_entries = write_segments(typical, schema)
    manifest = {
        "metadata": {"generated_at": datetime.now(timezone.utc).isoformat(), "version": __version__},
        "inputs": inputs,
        "schema": schema.to_dict(),
        "segment_policy": asdict(seg_policy),
        "outlier_policy": asdict(out_policy),
        "anomalous_dates": list(ANOMALOUS_DATES),
        "counts": {"input_samples": len(samples), "parse_rejects": len(parse_rejects),
                   "discharge_samples": n_discharge,
                   "non_discharge_samples": len(samples) - n_discharge,
                   "outlier_samples": len(outliers),
                   "typical_samples": sum(len(s) for s in typical),
                   "segments": len(segments), "typical_segments": len(typical)},
        "segments_all": all_entries,
        "segments_typical": typ_entries,
    }
    stats = {"all": summarize(segments).to_dict() if segments else None,
             "typical": summarize(typical).to_dict() if typical else None}
    with Outputs(cfg.output) as out:
        out.write("segments_all.csv", all_csv)
        out.write("segments_typical.csv", typ_csv)
        out.write("outliers.csv", write_telemetry(outliers, schema))
        out.write("parse_rejects.json", _dump(parse_rejects))
        out.write("feature_stats.json", _dump(stats))
        out.write("manifest.json", _dump(manifest))
    c = manifest["counts"]
    print(f"ingested {len(inputs)} files: {c['discharge_samples']} discharge samples "
          f"in {c['segments']} segments, {c['typical_samples']} typical after outlier filtering")
    return 0


def load_segments(out_dir, which="typical"):
    out = Path(out_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise EmptyInputError(f"{manifest_path} not found; run 'ingest' first")
    manifest = json.loads(manifest_path.read_text())
    schema = Schema.from_dict(manifest["schema"])
    text = (out / f"segments_{which}.csv").read_text()
    return read_segments(text, manifest[f"segments_{which}"], schema)


def _ecm_segments(cfg):
    segs = load_segments(cfg.output, "typical" if cfg.ecm_filtered else "all")
    if cfg.ecm_curves == "exclude-anomalous":
        segs = select_dates(segs)
    elif cfg.ecm_curves != "all":
        raise ConfigurationError("ecm_curves must be 'all' or 'exclude-anomalous'")
    return segs


# --- fitting ----------------------------------------------------------------

def cmd_fit_ecm(cfg):
    report = fit_ecm(_ecm_segments(cfg), cfg.ecm_options())
    residual_lines = ["residual_v"] + [repr(float(r)) for r in report.residuals]
    with Outputs(cfg.output) as out:
        out.write("ecm_params.json", report.params.to_json() + "\n")
        out.write("ecm_fit.json", _dump(report.summary()))
        out.write("ecm_residuals.csv", "\n".join(residual_lines) + "\n")
    flag = "" if report.converged else " (outer search hit the iteration limit)"
    print(f"ECM fit on {len(report.curves_used)} curves: rmse {report.rmse * 1000:.3f} mV, "
          f"{report.iterations} iterations{flag}")
    return 0


def cmd_fit_ml(cfg):
    X, y = dataset_from_segments(load_segments(cfg.output, "typical"))
    model = fit_pipeline(X, y, cfg.pipeline())
    with Outputs(cfg.output) as out:
        out.write("ml_model.json", model.to_json() + "\n")
    print(f"ML pipeline: degree {model.poly.degree}, {model.active_count} active terms, "
          f"train R2 {model.train_r2:.4f}, test R2 {model.test_r2:.4f}")
    return 0


def _load_ecm(cfg):
    path = Path(cfg.output) / "ecm_params.json"
    if not path.exists():
        raise EmptyInputError(f"{path} not found; run 'fit-ecm' first")
    return EcmParams.from_json(path.read_text())


def _load_ml(cfg):
    path = Path(cfg.output) / "ml_model.json"
    if not path.exists():
        raise EmptyInputError(f"{path} not found; run 'fit-ml' first")
    return RegressionModel.from_json(path.read_text())


# --- evaluation -------------------------------------------------------------

def _ml_predict_quiet(model, X):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        return predict(model, X[:, 0], X[:, 1], X[:, 2])


def cmd_eval(cfg, which=("ecm", "ml")):
    results = {}
    want_ecm = "ecm" in which and (Path(cfg.output) / "ecm_params.json").exists()
    want_ml = "ml" in which and (Path(cfg.output) / "ml_model.json").exists()
    if not (want_ecm or want_ml):
        raise EmptyInputError("no fitted model found; run 'fit-ecm' and/or 'fit-ml' first")
    with Outputs(cfg.output) as out:
        if want_ecm:
            segs = _ecm_segments(cfg)
            params = _load_ecm(cfg)
            actual = np.concatenate([s.voltages for s in segs])
            pred = np.concatenate([predict_voltage(params, s.currents, s.dod, s.temperatures)
                                   for s in segs])
            lsb = cfg.lsb or infer_lsb(actual)
            rep = lsb_errors(actual, pred, lsb, label="ecm", predicted_decimals=cfg.predicted_decimals)
            results["ecm"] = {"full": rep.to_dict(),
                              "curves_used": sorted({s.source_date for s in segs})}
            out.write("eval_ecm.json", _dump(results["ecm"]))
            out.write("hist_ecm.csv", rep.histogram_csv())
            out.write("hist_ecm.svg", histogram_svg(rep, "Equivalent circuit model error"))
        if want_ml:
            model = _load_ml(cfg)
            X, y = dataset_from_segments(load_segments(cfg.output, "typical"))
            if X.shape[0] != model.n_samples:
                raise ConfigurationError(
                    f"model was fitted on {model.n_samples} rows but the typical set has {X.shape[0]}")
            lsb = cfg.lsb or infer_lsb(y)
            train, test = split_indices(X.shape[0], model.config)
            pred = _ml_predict_quiet(model, X)
            parts = {}
            for part, idx in (("full", np.arange(X.shape[0])), ("train", train), ("test", test)):
                rep = lsb_errors(y[idx], pred[idx], lsb, label=f"ml-{part}",
                                 predicted_decimals=cfg.predicted_decimals)
                parts[part] = rep.to_dict()
                out.write(f"hist_ml_{part}.csv", rep.histogram_csv())
                out.write(f"hist_ml_{part}.svg", histogram_svg(rep, f"ML model error ({part})"))
            results["ml"] = parts
            out.write("eval_ml.json", _dump(parts))
    for name, res in results.items():
        r = res["full"]
        cov = ", ".join(f"<={k} LSB {v:.2%}" for k, v in r["coverage"].items())
        print(f"{name}: LSB {r['lsb_step']:g} V, max |err| {r['max_abs_error_lsb']:.4f} LSB, "
              f"exact {r['exact_zero_fraction']:.2%}, {cov}")
    return 0


def _report_from_dict(d):
    h = d["histogram"]
    return LsbErrorReport(lsb_step=d["lsb_step"], errors=np.empty(0),
                          max_abs_error=d["max_abs_error_lsb"],
                          histogram_edges=np.array(h["edges_lsb"]),
                          histogram_counts=np.array(h["counts"]),
                          coverage={float(k): v for k, v in d["coverage"].items()},
                          exact_zero=d["exact_zero_fraction"],
                          exceed_2lsb_fraction=d["exceed_2lsb_fraction"], label=d["label"])


def cmd_compare(cfg, ml_part="full"):
    out_dir = Path(cfg.output)
    try:
        ecm = json.loads((out_dir / "eval_ecm.json").read_text())["full"]
        ml = json.loads((out_dir / "eval_ml.json").read_text())[ml_part]
    except FileNotFoundError as exc:
        raise EmptyInputError(f"{exc.filename} not found; run 'eval' after fitting both models") from exc
    cmp = compare_models(_report_from_dict(ecm), _report_from_dict(ml))
    with Outputs(cfg.output) as out:
        out.write("comparison.json", cmp.to_json() + "\n")
    print(f"{'metric':<22}{'ECM':>10}{'ML':>10}{'delta':>10}  winner")
    for r in cmp.rows:
        print(f"{r['metric']:<22}{r['ecm']:>10.4f}{r['ml']:>10.4f}{r['delta']:>10.4f}  {r['winner']}")
    return 0


def cmd_sweep(cfg, which=("ecm", "ml")):
    dods, currents = _range(cfg.sweep_dod), _range(cfg.sweep_current)
    t = cfg.sweep_temperature
    predictors = {}
    if "ecm" in which and (Path(cfg.output) / "ecm_params.json").exists():
        predictors["ecm"] = ecm_predictor(_load_ecm(cfg))
    if "ml" in which and (Path(cfg.output) / "ml_model.json").exists():
        predictors["ml"] = ml_predictor(_load_ml(cfg))
    if not predictors:
        raise EmptyInputError("no fitted model found; run 'fit-ecm' and/or 'fit-ml' first")
    with Outputs(cfg.output) as out, warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        for name, f in predictors.items():
            vs = voltage_sweep(f, t, dods, currents)
            ss = sensitivity_sweep(f, t, dods, currents, cfg.delta_i)
            out.write(f"sweep_{name}_voltage.csv", vs.to_csv())
            out.write(f"sweep_{name}_voltage.svg", sweep_svg(vs, f"{name.upper()} V_batt, T = {t:g} °C"))
            out.write(f"sweep_{name}_dudi.csv", ss.to_csv())
            out.write(f"sweep_{name}_dudi.svg", sweep_svg(ss, f"{name.upper()} ΔU/ΔI, T = {t:g} °C"))
    print(f"sweeps at T = {t:g} degC over {dods.size} DOD levels x {currents.size} currents: "
          + ", ".join(predictors))
    return 0


def cmd_synth(cfg, curves=10, noise=0.002, quantization=0.01, params_path=None):
    params = EcmParams.from_json(Path(params_path).read_text()) if params_path else DEFAULT_PARAMS
    segs = gen_curve_set(n_curves=curves, params=params, noise_sigma=noise,
                         quantization=quantization, seed=cfg.seed)
    with Outputs(cfg.output) as out:
        for seg in segs:
            out.write(f"synth_{seg.source_date}.csv", write_telemetry(seg.samples, include_source_date=False))
        out.write("synth_params.json", params.to_json() + "\n")
    print(f"wrote {len(segs)} synthetic discharge files to {cfg.output}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", dest="output", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="random seed (default: 42)")
    common.add_argument("--lsb", type=float, help="voltage quantisation step in V (default: inferred)")

    p = argparse.ArgumentParser(prog="cubesat-battery", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="parse telemetry and extract discharge segments")
    s.add_argument("inputs", nargs="*", help="telemetry files or glob patterns")
    s.add_argument("--min-length", type=int, help="minimum segment length in samples")
    s.add_argument("--upper-current", type=float, help="typical current upper bound, mA")

    s = sub.add_parser("fit-ecm", parents=[common], help="fit the equivalent-circuit model")
    s.add_argument("--curves", dest="ecm_curves", choices=["all", "exclude-anomalous"])
    s.add_argument("--unfiltered", action="store_true", help="fit on segments before outlier filtering")
    s.add_argument("--constant-temperature", action="store_true",
                   help="temperature-independent coefficients")

    s = sub.add_parser("fit-ml", parents=[common], help="fit the polynomial LASSO-LARS pipeline")
    s.add_argument("--degree", type=int)
    s.add_argument("--folds", type=int)
    s.add_argument("--split", choices=["shuffle", "chronological"])

    s = sub.add_parser("eval", parents=[common], help="LSB error reports and histograms")
    s.add_argument("--model", choices=["ecm", "ml", "both"], default="both")
    s.add_argument("--predicted-decimals", type=int)

    s = sub.add_parser("compare", parents=[common], help="ECM versus ML coverage table")
    s.add_argument("--ml-part", choices=["full", "train", "test"], default="full")

    s = sub.add_parser("sweep", parents=[common], help="voltage and dU/dI sweeps")
    s.add_argument("--model", choices=["ecm", "ml", "both"], default="both")
    s.add_argument("--temperature", dest="sweep_temperature", type=float)
    s.add_argument("--dod", dest="sweep_dod", help="start:stop:step (inclusive) or list, mA*h")
    s.add_argument("--current", dest="sweep_current", help="start:stop:step (inclusive) or list, mA")
    s.add_argument("--delta-i", dest="delta_i", type=float)

    s = sub.add_parser("synth", parents=[common], help="write synthetic discharge telemetry")
    s.add_argument("--curves", type=int, default=10)
    s.add_argument("--noise", type=float, default=0.002, help="voltage noise sigma, V")
    s.add_argument("--quantization", type=float, default=0.01, help="voltage lattice step, V (0 = none)")
    s.add_argument("--params", help="EcmParams JSON for the true model")
    return p




def _config(args):
    overrides = {k: getattr(args, k, None) for k in
                 ("output", "seed", "lsb", "ecm_curves", "sweep_temperature", "sweep_dod",
                  "sweep_current", "delta_i", "predicted_decimals")}
    if getattr(args, "inputs", None):
        overrides["inputs"] = args.inputs
    cfg = RunConfig.load(args.config, overrides)
    if getattr(args, "min_length", None) is not None:
        cfg.segment_policy = {**cfg.segment_policy, "min_length": args.min_length}
    if getattr(args, "upper_current", None) is not None:
        cfg.outlier_policy = {**cfg.outlier_policy, "upper": args.upper_current}
    if getattr(args, "unfiltered", False):
        cfg.ecm_filtered = False
    if getattr(args, "constant_temperature", False):
        cfg.ecm = {**cfg.ecm, "affine_temperature": False}
    ml = {k: getattr(args, k, None) for k in ("degree", "folds", "split")}
    cfg.ml = {**cfg.ml, **{k: v for k, v in ml.items() if v is not None}}
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        models = ("ecm", "ml") if getattr(args, "model", "both") == "both" else (args.model,)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "fit-ecm":
            return cmd_fit_ecm(cfg)
        if args.command == "fit-ml":
            return cmd_fit_ml(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, models)
        if args.command == "compare":
            return cmd_compare(cfg, args.ml_part)
        if args.command == "sweep":
            return cmd_sweep(cfg, models)
        if args.command == "synth":
            return cmd_synth(cfg, args.curves, args.noise, args.quantization, args.params)
    except (DischargeModelError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
