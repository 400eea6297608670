"""Scoring of estimator submissions against ground truth.

A submission mirrors the challenge tree: for each DGP folder it holds one
``<rep>.att.csv`` per replicate (header ``att,att_lower,att_upper``, one row)
and optionally one ``<rep>.cate.csv`` (header ``cate,cate_lower,cate_upper``,
one row per unit in X.csv order). CATE files are all-or-nothing per DGP;
when absent the CATE metrics are reported as null rather than failing, since
some methods only estimate the ATT.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from catebench._csvio import format_value, read_columns
from catebench.engine import TRUTH_FILENAME, GroundTruth, read_ground_truth, read_replicate
from catebench.exceptions import ValidationError

ATT_HEADER = ["att", "att_lower", "att_upper"]
CATE_HEADER = ["cate", "cate_lower", "cate_upper"]

REPORT_FIELDS = [
    "family",
    "bits",
    "replicates",
    "rmse_att",
    "rmse_cate",
    "cover_att",
    "cover_cate",
    "cover_catt",
    "att_interval_length",
    "cate_interval_length",
]

DETAIL_FIELDS = [
    "family",
    "bits",
    "replicate",
    "true_att",
    "rmse_att",
    "att_covered",
    "att_interval_length",
    "rmse_cate",
    "cate_coverage",
    "catt_coverage",
    "cate_interval_length",
]


@dataclass(frozen=True)
class AttEstimate:
    """Point and interval estimate of the ATT for one replicate."""

    point: float
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValidationError(f"inverted ATT interval: [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class CateEstimate:
    """Per-unit point and interval estimates of the CATE for one replicate."""

    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if not (self.point.shape == self.lower.shape == self.upper.shape):
            raise ValidationError("CATE point/lower/upper must have equal length")
        if np.any(self.lower > self.upper):
            i = int(np.argmax(self.lower > self.upper))
            raise ValidationError(f"inverted CATE interval at unit {i + 1}")


def true_att(alpha, z) -> float:
    """Mean true treatment effect over the treated units."""
    alpha, z = np.asarray(alpha, dtype=np.float64), np.asarray(z)
    if alpha.shape != z.shape:
        raise ValidationError(f"alpha and z lengths differ: {alpha.shape} vs {z.shape}")
    treated = z == 1
    if not treated.any():
        raise ValidationError("no treated units; ATT undefined")
    return float(alpha[treated].mean())


def rmse_cate(estimate, alpha) -> float:
    """Root mean squared per-unit error of a CATE estimate."""
    estimate, alpha = np.asarray(estimate, dtype=np.float64), np.asarray(alpha, dtype=np.float64)
    if estimate.shape != alpha.shape:
        raise ValidationError(f"estimate and truth lengths differ: {estimate.shape} vs {alpha.shape}")
    return float(np.sqrt(np.mean((estimate - alpha) ** 2)))


def rmse_att(estimate: float, truth: float) -> float:
    """Absolute error of an ATT estimate (the RMSE of a single scalar)."""
    return abs(float(estimate) - float(truth))


def interval_covers(lower: float, upper: float, truth: float) -> int:
    """1 iff lower <= truth <= upper.

    Endpoints count as covered: for continuous estimands the boundary has
    measure zero, and the closed convention avoids penalizing legitimate
    degenerate (zero-width) intervals.
    """
    if lower > upper:
        raise ValidationError(f"inverted interval: [{lower}, {upper}]")
    return int(lower <= truth <= upper)


def coverage_summary(estimates, alpha, z_per_replicate, mode: str) -> float:
    """Coverage rate across replicates.

    att: fraction of replicates whose interval covers that replicate's true
    ATT. cate: mean over replicates of the per-unit coverage fraction.
    catt: the same restricted to treated units.
    """
    if mode not in ("att", "cate", "catt"):
        raise ValidationError(f"unknown coverage mode {mode!r}")
    if len(estimates) == 0:
        raise ValidationError("coverage needs at least one replicate")
    if len(estimates) != len(z_per_replicate):
        raise ValidationError("one treatment vector per replicate estimate is required")
    alpha = np.asarray(alpha, dtype=np.float64)

    rates = []
    for est, z in zip(estimates, z_per_replicate):
        z = np.asarray(z)
        if mode == "att":
            rates.append(interval_covers(est.lower, est.upper, true_att(alpha, z)))
            continue
        covered = (est.lower <= alpha) & (alpha <= est.upper)
        if mode == "cate":
            rates.append(covered.mean())
        else:
            treated = z == 1
            if not treated.any():
                raise ValidationError("no treated units; catt coverage undefined")
            rates.append(covered[treated].mean())
    return float(np.mean(rates))


def score_replicate(truth: GroundTruth, z, att: AttEstimate, cate: CateEstimate | None) -> dict:
    """All per-replicate metrics as one row dict (CATE entries None if absent)."""
    z = np.asarray(z)
    t_att = true_att(truth.alpha, z)
    row = {
        "true_att": t_att,
        "rmse_att": rmse_att(att.point, t_att),
        "att_covered": interval_covers(att.lower, att.upper, t_att),
        "att_interval_length": float(att.upper - att.lower),
        "rmse_cate": None,
        "cate_coverage": None,
        "catt_coverage": None,
        "cate_interval_length": None,
    }
    if cate is not None:
        if cate.point.shape != truth.alpha.shape:
            raise ValidationError(
                f"CATE estimate has {cate.point.shape[0]} rows, truth has {truth.alpha.shape[0]}"
            )
        covered = (cate.lower <= truth.alpha) & (truth.alpha <= cate.upper)
        treated = z == 1
        row.update(
            rmse_cate=rmse_cate(cate.point, truth.alpha),
            cate_coverage=float(covered.mean()),
            catt_coverage=float(covered[treated].mean()),
            cate_interval_length=float(np.mean(cate.upper - cate.lower)),
        )
    return row


def aggregate_report(detail_rows: list[dict]) -> dict:
    """Collapse per-replicate rows of one DGP into the published criteria."""
    if not detail_rows:
        raise ValidationError("cannot aggregate an empty set of replicate scores")
    have_cate = detail_rows[0]["rmse_cate"] is not None

    def mean_of(key):
        return float(np.mean([r[key] for r in detail_rows]))

    return {
        "replicates": len(detail_rows),
        "rmse_att": mean_of("rmse_att"),
        "rmse_cate": mean_of("rmse_cate") if have_cate else None,
        "cover_att": mean_of("att_covered"),
        "cover_cate": mean_of("cate_coverage") if have_cate else None,
        "cover_catt": mean_of("catt_coverage") if have_cate else None,
        "att_interval_length": mean_of("att_interval_length"),
        "cate_interval_length": mean_of("cate_interval_length") if have_cate else None,
    }


# --- submission files -------------------------------------------------------


def read_att_estimate(path) -> AttEstimate:
    _, values = read_columns(path, expected_header=ATT_HEADER)
    if values.shape[0] != 1:
        raise ValidationError(f"{path}: ATT file must have exactly one data row, got {values.shape[0]}")
    return AttEstimate(point=values[0, 0], lower=values[0, 1], upper=values[0, 2])


def read_cate_estimate(path, n: int) -> CateEstimate:
    _, values = read_columns(path, expected_header=CATE_HEADER)
    if values.shape[0] != n:
        raise ValidationError(f"{path}: CATE file must have {n} data rows, got {values.shape[0]}")
    return CateEstimate(point=values[:, 0], lower=values[:, 1], upper=values[:, 2])


def _replicate_ids(dgp_folder: Path) -> list[int]:
    ids = [
        int(p.stem)
        for p in dgp_folder.iterdir()
        if p.suffix == ".csv" and re.fullmatch(r"[0-9]+", p.stem)
    ]
    if not ids:
        raise ValidationError(f"{dgp_folder}: no replicate files found")
    return sorted(ids)


def _score_one_dgp(args) -> tuple[str, str, list[dict]]:
    challenge_root, submission_root, family, bits, replicate_ids = args
    dgp_dir = Path(challenge_root) / family / bits
    sub_dir = Path(submission_root) / family / bits
    if not sub_dir.is_dir():
        raise ValidationError(f"submission missing DGP folder {sub_dir}")
    truth = read_ground_truth(dgp_dir / TRUTH_FILENAME)
    n = truth.alpha.shape[0]

    if replicate_ids is None:
        replicate_ids = _replicate_ids(dgp_dir)
    cate_present = [(sub_dir / f"{rid}.cate.csv").exists() for rid in replicate_ids]
    if any(cate_present) and not all(cate_present):
        missing = replicate_ids[cate_present.index(False)]
        raise ValidationError(
            f"{sub_dir}: CATE files are all-or-nothing per DGP; missing {missing}.cate.csv"
        )

    rows = []
    for rid in replicate_ids:
        z, _ = read_replicate(dgp_dir / f"{rid}.csv")
        att_path = sub_dir / f"{rid}.att.csv"
        if not att_path.exists():
            raise ValidationError(f"submission missing {att_path}")
        att = read_att_estimate(att_path)
        cate = read_cate_estimate(sub_dir / f"{rid}.cate.csv", n) if cate_present[0] else None
        row = {"family": family, "bits": bits, "replicate": rid}
        row.update(score_replicate(truth, z, att, cate))
        rows.append(row)
    return family, bits, rows


@dataclass(frozen=True)
class EvaluationReport:
    """Per-DGP aggregates plus the per-replicate detail rows."""

    rows: list[dict]
    detail: list[dict]

    def to_machine_csv(self) -> str:
        lines = [",".join(REPORT_FIELDS)]
        for row in self.rows:
            lines.append(",".join(_render_cell(row[k]) for k in REPORT_FIELDS))
        return "\n".join(lines) + "\n"

    def detail_csv(self) -> str:
        lines = [",".join(DETAIL_FIELDS)]
        for row in self.detail:
            lines.append(",".join(_render_cell(row[k]) for k in DETAIL_FIELDS))
        return "\n".join(lines) + "\n"

    def long_csv(self) -> str:
        """Plot-ready long format: one (family, bits, metric, value) row."""
        lines = ["family,bits,metric,value"]
        for row in self.rows:
            for key in REPORT_FIELDS[2:]:
                lines.append(f"{row['family']},{row['bits']},{key},{_render_cell(row[key])}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        widths = {k: max(len(k), 8) for k in REPORT_FIELDS}
        header = "  ".join(k.ljust(widths[k]) for k in REPORT_FIELDS)
        out = [header, "-" * len(header)]
        for row in self.rows:
            cells = []
            for k in REPORT_FIELDS:
                v = row[k]
                if v is None:
                    text = "-"
                elif isinstance(v, float):
                    text = f"{v:.4f}"
                else:
                    text = str(v)
                cells.append(text.ljust(widths[k]))
            out.append("  ".join(cells))
        return "\n".join(out) + "\n"


def _render_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format_value(v, "float")
    return str(v)


def score_submission(
    challenge_root,
    submission_root,
    families=None,
    settings=None,
    replicate_ids=None,
    jobs: int = 1,
) -> EvaluationReport:
    """Score a submission tree against a challenge tree.

    DGPs are selected by the optional family/settings filters; replicate ids
    default to every replicate file present in the challenge tree. Structural
    problems (missing or malformed files, length mismatches) raise
    ValidationError with the offending coordinates.
    """
    challenge_root, submission_root = Path(challenge_root), Path(submission_root)
    if not challenge_root.is_dir():
        raise ValidationError(f"challenge tree {challenge_root} does not exist")
    if not submission_root.is_dir():
        raise ValidationError(f"submission tree {submission_root} does not exist")

    from catebench.engine import ALL_SETTINGS, FAMILIES

    families = tuple(families) if families else tuple(
        f for f in FAMILIES if (challenge_root / f).is_dir()
    )
    if not families:
        raise ValidationError(f"{challenge_root}: no family folders found")
    settings = tuple(settings) if settings else ALL_SETTINGS
    present = [
        (f, b) for f in families for b in settings if (challenge_root / f / b).is_dir()
    ]
    if not present:
        raise ValidationError("filters select no DGP present in the challenge tree")

    tasks = [
        (str(challenge_root), str(submission_root), f, b, replicate_ids) for f, b in present
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_score_one_dgp, tasks))
    else:
        results = [_score_one_dgp(t) for t in tasks]

    rows, detail = [], []
    for family, bits, dgp_rows in results:
        detail.extend(dgp_rows)
        agg = {"family": family, "bits": bits}
        agg.update(aggregate_report(dgp_rows))
        rows.append(agg)
    return EvaluationReport(rows=rows, detail=detail)


def make_oracle_submission(challenge_root, submission_root, half_width: float = 0.1) -> int:
    """Write the perfect-knowledge submission derived from each dgp.csv.

    Point estimates equal the truth; intervals are truth +/- half_width. This
    doubles as executable documentation of the submission format and must
    score zero RMSE with full coverage. Returns the number of files written.
    """
    from catebench._csvio import write_columns
    from catebench.engine import FAMILIES

    challenge_root, submission_root = Path(challenge_root), Path(submission_root)
    written = 0
    for family in FAMILIES:
        fam_dir = challenge_root / family
        if not fam_dir.is_dir():
            continue
        for dgp_dir in sorted(p for p in fam_dir.iterdir() if p.is_dir()):
            truth = read_ground_truth(dgp_dir / TRUTH_FILENAME)
            out_dir = submission_root / family / dgp_dir.name
            for rid in _replicate_ids(dgp_dir):
                z, _ = read_replicate(dgp_dir / f"{rid}.csv")
                t_att = true_att(truth.alpha, z)
                write_columns(
                    out_dir / f"{rid}.att.csv",
                    ATT_HEADER,
                    [[t_att], [t_att - half_width], [t_att + half_width]],
                    ["float", "float", "float"],
                )
                write_columns(
                    out_dir / f"{rid}.cate.csv",
                    CATE_HEADER,
                    [truth.alpha, truth.alpha - half_width, truth.alpha + half_width],
                    ["float", "float", "float"],
                )
                written += 2
    if written == 0:
        raise ValidationError(f"{challenge_root}: no DGP folders to build a submission from")
    return written
