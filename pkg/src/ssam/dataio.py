"""Dataset ingestion, synthetic teacher data, and the trace/config formats.

File contracts:

* Trace files are comma-delimited text with header
  ``k,t,loss,eta,residual,step_norm[,dist]``, values rendered with 17
  significant digits so ``read(write(T))`` reproduces every double
  bit-exactly.  Metadata rides along as leading ``# key = value`` lines.
* Config files are flat ``key = value`` text, diff-friendly, and
  round-trip losslessly through :class:`ExperimentConfig`.

Writes are atomic (temp file + rename), so an interrupted run leaves no
partial trace behind.  Nothing here writes timestamps: rerunning a
seeded experiment must produce byte-identical files.
"""

import csv
import os
from dataclasses import dataclass, fields

import numpy as np

from .core import AlgoParams, DataError, StepSchedule, UsageError
from .relunet import Sample, batch_forward, init_params

TRACE_COLUMNS = ("k", "t", "loss", "eta", "residual", "step_norm")


class Dataset:
    """Immutable feature/target arrays with an optional normalization record.

    ``norm`` is ``(mean, scale)`` per feature such that the stored
    features are ``(raw - mean) / scale``; it is present exactly when
    the data has been standardized, so raw values stay recoverable.
    """

    def __init__(self, X, Y, norm=None, meta=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        Y = np.ascontiguousarray(Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2:
            raise UsageError("Dataset arrays must be 2-D")
        if X.shape[0] != Y.shape[0]:
            raise UsageError("feature and target row counts differ")
        X.setflags(write=False)
        Y.setflags(write=False)
        self.X = X
        self.Y = Y
        self.norm = norm
        self.meta = dict(meta or {})

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def m(self):
        return self.Y.shape[1]

    def __len__(self):
        return self.X.shape[0]

    def sample(self, i):
        return Sample(self.X[i].copy(), self.Y[i].copy())

    def samples(self):
        return [self.sample(i) for i in range(len(self))]


def _resolve_target(header, target):
    if isinstance(target, str):
        if target not in header:
            raise UsageError(f"target column {target!r} not in header {header}")
        return header.index(target)
    idx = int(target)
    if idx < 0:
        idx += len(header)
    if not 0 <= idx < len(header):
        raise UsageError(f"target column index {target} out of range "
                         f"for {len(header)} columns")
    return idx


def load_csv(path, delimiter=";", target=-1):
    """Read a delimited numeric file with a header row.

    All non-target columns become features; ``target`` picks the label
    column by name or index (default: last column, which matches the
    wine-quality layout of 11 features plus a trailing quality score).
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh, delimiter=delimiter))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file, expected a header row")
    header = [name.strip().strip('"') for name in rows[0]]
    if len(header) == 1 and any(d in header[0] for d in ",;\t"):
        raise DataError(
            f"{path}: header parsed as a single column {header[0]!r}; "
            f"wrong delimiter? (got {delimiter!r})")
    t_idx = _resolve_target(header, target)
    n_feat = len(header) - 1
    feats, targets = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected "
                            f"{len(header)} fields, got {len(row)}")
        vals = []
        for name, field in zip(header, row):
            try:
                vals.append(float(field))
            except ValueError:
                raise DataError(f"{path}: line {lineno}: column {name!r}: "
                                f"non-numeric value {field.strip()!r}") from None
        targets.append(vals[t_idx])
        del vals[t_idx]
        feats.append(vals)
    X = np.array(feats, dtype=np.float64).reshape(len(feats), n_feat)
    Y = np.array(targets, dtype=np.float64).reshape(len(targets), 1)
    return Dataset(X, Y, meta={"source": str(path), "target": header[t_idx]})


def standardize(dataset):
    """Center each feature and scale to unit std; targets untouched.

    Constant features are centered only (scale 1), so the transform is
    always invertible.  The (mean, scale) pair is stored on the result.
    """
    if len(dataset) == 0:
        raise UsageError("cannot standardize an empty dataset")
    mean = dataset.X.mean(axis=0)
    std = dataset.X.std(axis=0)
    scale = np.where(std == 0.0, 1.0, std)
    X = (dataset.X - mean) / scale
    return Dataset(X, dataset.Y, norm=(mean, scale), meta=dataset.meta)


def destandardize(dataset):
    """Undo :func:`standardize` using the stored normalization record."""
    if dataset.norm is None:
        raise UsageError("dataset carries no normalization record")
    mean, scale = dataset.norm
    return Dataset(dataset.X * scale + mean, dataset.Y, meta=dataset.meta)


def synth_teacher(arch, n_samples, noise_std=0.0, seed=0):
    """Labeled data from a hidden random network of the same architecture.

    Features are standard normal; targets are the teacher's outputs
    plus optional Gaussian label noise.  The teacher weights and the
    implied loss floor (m * noise_std^2 / 2) ride along in ``meta``,
    giving convergence tests a known target.
    """
    if n_samples < 1:
        raise UsageError("n_samples must be >= 1")
    if noise_std < 0:
        raise UsageError("noise_std must be nonnegative")
    # a distinct stream from plain default_rng(seed): optimizer runs seed
    # their generators that way, and a student drawing its start from the
    # same stream would otherwise begin exactly at the teacher weights
    rng = np.random.default_rng([seed, 1])
    teacher = init_params(arch, rng)
    X = rng.normal(size=(n_samples, arch.n))
    Y = batch_forward(teacher, X)
    if noise_std > 0:
        Y = Y + noise_std * rng.normal(size=Y.shape)
    meta = {
        "teacher": teacher.flatten(),
        "noise_std": noise_std,
        "loss_floor": 0.5 * arch.m * noise_std ** 2,
        "seed": seed,
    }
    return Dataset(X, Y, meta=meta)


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def write_trace(path, trace):
    """Render a trace to disk; see the module docstring for the format."""
    cols = list(TRACE_COLUMNS) + (["dist"] if trace.dist is not None else [])
    lines = [f"# {key} = {trace.meta[key]}" for key in sorted(trace.meta)]
    lines.append(",".join(cols))
    arrays = [getattr(trace, c) for c in cols[1:]]
    for i in range(len(trace)):
        vals = ",".join("%.17g" % a[i] for a in arrays)
        lines.append(f"{int(trace.k[i])},{vals}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_trace(path):
    """Parse a trace file; numeric columns reproduce the written doubles
    bit-exactly, metadata comes back as strings."""
    from .optimizer import Trace

    try:
        with open(path) as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    meta = {}
    body_at = 0
    for body_at, line in enumerate(raw):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition("=")
        meta[key.strip()] = value.strip()
    if body_at >= len(raw) or raw[body_at].startswith("#"):
        raise DataError(f"{path}: missing trace header line")
    cols = raw[body_at].split(",")
    if cols[:6] != list(TRACE_COLUMNS) or cols[6:] not in ([], ["dist"]):
        raise DataError(f"{path}: unexpected trace header {raw[body_at]!r}")
    has_dist = len(cols) == 7
    data = [[] for _ in cols]
    for lineno, line in enumerate(raw[body_at + 1:], start=body_at + 2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(cols):
            raise DataError(f"{path}: line {lineno}: expected "
                            f"{len(cols)} fields, got {len(parts)}")
        try:
            for slot, part in zip(data, parts):
                slot.append(float(part))
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-numeric field") from None
    return Trace(
        k=np.array(data[0], dtype=np.int64),
        t=np.array(data[1]), loss=np.array(data[2]), eta=np.array(data[3]),
        residual=np.array(data[4]), step_norm=np.array(data[5]),
        dist=np.array(data[6]) if has_dist else None,
        meta=meta,
    )


_SCHEDULES_IN_CONFIG = ("harmonic-paper", "constant-then-decay")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, file-round-trippable description of one experiment.

    The stepsize horizon of the harmonic law is tied to ``iters``, so
    the schedule follows tau0 / (1 + ramp * k / iters).
    """

    method: str = "ssam"
    oracle: str = "teacher"
    data: str = ""
    arch: tuple = (2, 11, 1)
    a: float = 0.1
    beta: float = 1.0
    schedule: str = "harmonic-paper"
    tau0: float = 0.03
    ramp: float = 5.0
    hold: int = 0
    decay: float = 1000.0
    iters: int = 50_000
    seed: int = 0
    half_width: float = 10.0
    batch: int = 1
    noise_std: float = 0.1
    n_samples: int = 2000

    def __post_init__(self):
        if self.method not in ("ssam", "sgd"):
            raise UsageError(f"unknown method {self.method!r}")
        if self.oracle not in ("teacher", "quadratic", "l1", "csv"):
            raise UsageError(f"unknown oracle {self.oracle!r}")
        if self.schedule not in _SCHEDULES_IN_CONFIG:
            raise UsageError(f"unknown schedule {self.schedule!r} "
                             f"(choose from {_SCHEDULES_IN_CONFIG})")
        arch = tuple(int(v) for v in self.arch)
        if len(arch) != 3:
            raise UsageError("arch must be three integers L,n,m")
        object.__setattr__(self, "arch", arch)
        if self.iters < 1:
            raise UsageError("iters must be >= 1")
        if self.n_samples < 1:
            raise UsageError("n_samples must be >= 1")
        if self.batch < 1:
            raise UsageError("batch must be >= 1")
        if self.a <= 0 or self.beta <= 0 or self.tau0 <= 0:
            raise UsageError("a, beta and tau0 must be positive")
        if self.half_width <= 0:
            raise UsageError("half_width must be positive")
        if self.noise_std < 0:
            raise UsageError("noise_std must be nonnegative")
        if self.oracle == "csv" and not self.data:
            raise UsageError("oracle 'csv' needs a data path")

    def step_schedule(self):
        """The configured stepsize law; ``iters`` doubles as the horizon
        of the harmonic law, matching tau0 / (1 + ramp k / N)."""
        return StepSchedule(kind=self.schedule, tau0=self.tau0,
                            horizon=self.iters, ramp=self.ramp,
                            hold=self.hold, decay=self.decay, a=self.a)

    def algo_params(self):
        return AlgoParams(a=self.a, beta=self.beta,
                          schedule=self.step_schedule(), seed=self.seed)

    def render(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "arch":
                out.append(f"arch = {','.join(str(i) for i in v)}")
            elif isinstance(v, str):
                out.append(f"{f.name} = {v!r}")
            else:
                out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"

    @classmethod
    def parse(cls, text):
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"config line {lineno}: expected key = value")
            key = key.strip()
            value = value.strip()
            if key not in known:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(known[key], value, lineno)
        return cls(**values)


def _parse_value(field, value, lineno):
    try:
        if field.name == "arch":
            return tuple(int(v) for v in value.split(","))
        if field.type in (int, "int"):
            return int(value)
        if field.type in (float, "float"):
            return float(value)
        return value.strip("\"'")
    except ValueError:
        raise UsageError(f"config line {lineno}: bad value {value!r} "
                         f"for {field.name}") from None


def save_config(path, config):
    _atomic_write(path, config.render())


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return ExperimentConfig.parse(text)
