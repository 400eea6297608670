"""Challenge orchestration: DGP enumeration, hierarchical seeding, replicate
generation, and the on-disk tree with its ground truth and manifest.

Every random draw is keyed by (master_seed, family, bits, replicate, purpose),
so any single file can be regenerated in isolation, in any order, on any
number of workers, and come out bit-identical.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from catebench._csvio import read_columns, render_columns
from catebench.covariates import CovariateTable, load_covariate_table, write_table
from catebench.dgp import (
    ADDITIVE_FAMILIES,
    ETA_HIGH,
    FAMILIES,
    KAPPA_STRONG,
    NON_ADDITIVE,
    XI_HIGH,
    CalibratedSurfaces,
    ScenarioConfig,
    compute_surfaces,
    draw_treatment,
    generate_additive_outcome,
)
from catebench.exceptions import ValidationError
from catebench.nonadditive import (
    TransformParams,
    cate_all,
    compute_transform_params,
    generate_nonadditive_outcome,
    potential_outcome_means,
)

ALL_SETTINGS = ("000", "001", "010", "011", "100", "101", "110", "111")

FIXED_PER_DGP = "fixed_per_dgp"
REDRAW_PER_REPLICATE = "redraw_per_replicate"
Z_POLICIES = (FIXED_PER_DGP, REDRAW_PER_REPLICATE)

DEFAULT_REPLICATES = 250

# integer codes that feed the seed sequences; order is frozen forever
_FAMILY_SEED_CODE = {name: i + 1 for i, name in enumerate(FAMILIES)}
_PURPOSE_SEED_CODE = {"treatment": 0, "outcome": 1, "group": 2}

REPLICATE_HEADER = ["z", "y"]
TRUTH_HEADER = ["alpha", "mu"]
TRUTH_FILENAME = "dgp.csv"
COVARIATE_FILENAME = "X.csv"
MANIFEST_FILENAME = "manifest.json"


@dataclass(frozen=True)
class DgpCode:
    """A DGP address: error family plus the 3-bit setting code.

    Bit 1 is the effect magnitude, bit 2 the noise level, bit 3 the selection
    strength; 0 is the low/weak setting and 1 the high/strong one.
    """

    family: str
    bits: str

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if len(self.bits) != 3 or any(c not in "01" for c in self.bits):
            raise ValidationError(f"bits must be a 3-character 0/1 string, got {self.bits!r}")

    def config(self) -> ScenarioConfig:
        return ScenarioConfig.from_levels(
            self.family,
            xi_high=self.bits[0] == "1",
            eta_high=self.bits[1] == "1",
            kappa_strong=self.bits[2] == "1",
        )


def encode_setting_code(config: ScenarioConfig) -> DgpCode:
    """Map a tabled scenario onto its 3-bit folder code."""
    if config.extended:
        raise ValidationError("extended (non-tabled) scenarios have no setting code")
    bits = (
        f"{int(config.xi == XI_HIGH)}"
        f"{int(config.eta == ETA_HIGH)}"
        f"{int(config.kappa == KAPPA_STRONG)}"
    )
    return DgpCode(family=config.family, bits=bits)


def substream(master_seed: int, family: str, bits: str, replicate_id: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (dgp, replicate, purpose) coordinate."""
    ss = np.random.SeedSequence(
        [int(master_seed), _FAMILY_SEED_CODE[family], int(bits, 2), int(replicate_id), _PURPOSE_SEED_CODE[purpose]]
    )
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ChallengeLayout:
    """The full build plan: which DGPs, how many replicates, which seeds."""

    n: int
    master_seed: int
    families: tuple[str, ...] = FAMILIES
    settings: tuple[str, ...] = ALL_SETTINGS
    replicates: int = DEFAULT_REPLICATES
    z_policy: str = FIXED_PER_DGP

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"unit count must be >= 2, got {self.n}")
        if self.replicates < 1:
            raise ValidationError(f"replicate count must be >= 1, got {self.replicates}")
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValidationError("master seed must be a nonnegative 64-bit integer")
        if self.z_policy not in Z_POLICIES:
            raise ValidationError(f"z_policy must be one of {Z_POLICIES}, got {self.z_policy!r}")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValidationError(f"unknown family {fam!r}")
        for bits in self.settings:
            DgpCode(family=self.families[0] if self.families else FAMILIES[0], bits=bits)
        if not self.families or not self.settings:
            raise ValidationError("families and settings filters must select at least one DGP")
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "settings", tuple(self.settings))

    @property
    def dgps(self) -> list[DgpCode]:
        return [DgpCode(f, b) for f in self.families for b in self.settings]

    @property
    def n_data_files(self) -> int:
        # replicate files plus one ground-truth file per DGP
        return len(self.families) * len(self.settings) * (self.replicates + 1)


def plan_challenge(
    master_seed: int,
    n: int,
    replicates: int = DEFAULT_REPLICATES,
    families=None,
    settings=None,
    z_policy: str = FIXED_PER_DGP,
) -> ChallengeLayout:
    """Build the deterministic plan; defaults enumerate all 32 DGPs x 250 replicates."""
    return ChallengeLayout(
        n=n,
        master_seed=master_seed,
        families=tuple(families) if families is not None else FAMILIES,
        settings=tuple(settings) if settings is not None else ALL_SETTINGS,
        replicates=replicates,
        z_policy=z_policy,
    )


@dataclass(frozen=True)
class GroundTruth:
    """Per-unit true treatment effect (alpha) and untreated mean (mu)."""

    alpha: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        if self.alpha.shape != self.mu.shape:
            raise ValidationError("alpha and mu must have equal length")


@dataclass(frozen=True)
class ReplicateData:
    """One generated dataset: treatment and outcome vectors plus its RNG address."""

    z: np.ndarray
    y: np.ndarray
    replicate_id: int
    rng_path: tuple

    def __post_init__(self):
        if self.z.shape != self.y.shape:
            raise ValidationError("z and y must have equal length")
        if not np.isin(self.z, (0, 1)).all():
            raise ValidationError("z must contain only 0 and 1")


@dataclass(frozen=True)
class _DgpContext:
    """Everything fixed across the replicates of one DGP."""

    code: DgpCode
    surfaces: CalibratedSurfaces
    x21: np.ndarray
    params: TransformParams | None  # non-additive only


def _make_context(table: CovariateTable, code: DgpCode) -> _DgpContext:
    config = code.config()
    surfaces = compute_surfaces(table, config)
    params = None
    if code.family == NON_ADDITIVE:
        params = compute_transform_params(surfaces.mu, surfaces.tau, surfaces.pi, surfaces.sigma_y)
    return _DgpContext(code=code, surfaces=surfaces, x21=table.column("X21"), params=params)


def ground_truth_for(ctx: _DgpContext) -> GroundTruth:
    """Exact alpha/mu columns for one DGP.

    All three additive families share the additive truth; in particular the
    heteroskedastic family gets the additive tau (the original contest files
    shipped a wrong, non-additive-formula alpha for it, which we correct).
    """
    if ctx.code.family in ADDITIVE_FAMILIES:
        return GroundTruth(alpha=ctx.surfaces.tau, mu=ctx.surfaces.mu)
    ey1, ey0 = potential_outcome_means(ctx.params)
    return GroundTruth(alpha=ey1 - ey0, mu=ey0)


def _replicate_from_context(
    ctx: _DgpContext, master_seed: int, replicate_id: int, z_policy: str
) -> ReplicateData:
    code = ctx.code
    z_rep = 0 if z_policy == FIXED_PER_DGP else replicate_id
    z = draw_treatment(ctx.surfaces.pi, substream(master_seed, code.family, code.bits, z_rep, "treatment"))
    outcome_rng = substream(master_seed, code.family, code.bits, replicate_id, "outcome")
    if code.family == NON_ADDITIVE:
        y = generate_nonadditive_outcome(ctx.surfaces, z, ctx.params, outcome_rng)
    else:
        group_rng = None
        if code.family == "group_corr":
            group_rng = substream(master_seed, code.family, code.bits, replicate_id, "group")
        y = generate_additive_outcome(ctx.surfaces, z, code.family, ctx.x21, outcome_rng, group_rng)
    return ReplicateData(
        z=z, y=y, replicate_id=replicate_id, rng_path=(master_seed, f"{code.family}/{code.bits}", replicate_id)
    )


def generate_replicate(
    covariates: CovariateTable,
    config: ScenarioConfig,
    master_seed: int,
    replicate_id: int,
    z_policy: str = FIXED_PER_DGP,
) -> ReplicateData:
    """Generate one replicate in isolation, bit-identical to a full build.

    Under the default fixed_per_dgp policy the treatment vector comes from the
    DGP-level substream and is shared by every replicate of the DGP, so
    replicates differ only in outcome noise; redraw_per_replicate redraws z
    from a replicate-level substream instead.
    """
    if replicate_id < 1:
        raise ValidationError(f"replicate id must be >= 1, got {replicate_id}")
    if z_policy not in Z_POLICIES:
        raise ValidationError(f"z_policy must be one of {Z_POLICIES}, got {z_policy!r}")
    ctx = _make_context(covariates, encode_setting_code(config))
    return _replicate_from_context(ctx, master_seed, replicate_id, z_policy)


# --- file emission ----------------------------------------------------------


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def render_ground_truth(truth: GroundTruth) -> str:
    return render_columns(TRUTH_HEADER, [truth.alpha, truth.mu], ["float", "float"])


def render_replicate(rep: ReplicateData) -> str:
    return render_columns(REPLICATE_HEADER, [rep.z, rep.y], ["int", "float"])


def write_ground_truth(truth: GroundTruth, folder) -> Path:
    """Write dgp.csv (columns alpha, mu) with round-trip-exact floats."""
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / TRUTH_FILENAME
    path.write_text(render_ground_truth(truth), encoding="utf-8")
    return path


def read_ground_truth(path) -> GroundTruth:
    _, values = read_columns(path, expected_header=TRUTH_HEADER)
    return GroundTruth(alpha=values[:, 0], mu=values[:, 1])


def read_replicate(path) -> tuple[np.ndarray, np.ndarray]:
    """Read one replicate file back as (z, y)."""
    _, values = read_columns(path, expected_header=REPLICATE_HEADER)
    z = values[:, 0]
    if not np.isin(z, (0.0, 1.0)).all():
        raise ValidationError(f"{path}: z column contains values other than 0/1")
    return z.astype(np.int64), values[:, 1]


def _build_one_dgp(args) -> tuple[str, dict[str, str], int]:
    """Worker: emit one DGP folder. Returns (relative folder, digests, files written)."""
    table, code, layout, out_root, resume = args
    out_root = Path(out_root)
    rel = f"{code.family}/{code.bits}"
    folder = out_root / code.family / code.bits
    folder.mkdir(parents=True, exist_ok=True)

    ctx = _make_context(table, code)
    digests: dict[str, str] = {}
    written = 0

    def emit(name: str, content: str):
        nonlocal written
        path = folder / name
        if resume and path.exists():
            digests[f"{rel}/{name}"] = _digest(path.read_bytes())
            return
        data = content.encode("utf-8")
        path.write_bytes(data)
        digests[f"{rel}/{name}"] = _digest(data)
        written += 1

    emit(TRUTH_FILENAME, render_ground_truth(ground_truth_for(ctx)))
    for rep_id in range(1, layout.replicates + 1):
        rep = _replicate_from_context(ctx, layout.master_seed, rep_id, layout.z_policy)
        emit(f"{rep_id}.csv", render_replicate(rep))
    return rel, digests, written


def build_challenge(
    layout: ChallengeLayout,
    covariates: CovariateTable,
    out_root,
    jobs: int = 1,
    resume: bool = False,
    config_echo: dict | None = None,
) -> dict:
    """Emit the full challenge tree and its manifest; returns the build report.

    The tree is ``family/bits/{1..m}.csv`` plus one dgp.csv per DGP and the
    shared X.csv at the root. Workers run per DGP; since every file is a pure
    function of (master seed, coordinates), scheduling cannot affect bytes.
    Existing files are skipped when ``resume`` is set.
    """
    if covariates.n != layout.n:
        raise ValidationError(f"layout expects n={layout.n} but covariate table has n={covariates.n}")
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)

    digests: dict[str, str] = {}
    x_path = out_root / COVARIATE_FILENAME
    write_table(covariates, x_path)
    digests[COVARIATE_FILENAME] = _digest(x_path.read_bytes())

    tasks = [(covariates, code, layout, str(out_root), resume) for code in layout.dgps]
    written = 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_build_one_dgp, tasks))
    else:
        results = [_build_one_dgp(t) for t in tasks]
    for _, dgp_digests, dgp_written in results:
        digests.update(dgp_digests)
        written += dgp_written

    import catebench

    manifest = {
        "format": "catebench-challenge/1",
        "package_version": catebench.__version__,
        "master_seed": int(layout.master_seed),
        "n": layout.n,
        "replicates": layout.replicates,
        "z_policy": layout.z_policy,
        "families": list(layout.families),
        "settings": list(layout.settings),
        "covariate_provenance": covariates.provenance,
        "effective_config": config_echo or {},
        "files": {k: digests[k] for k in sorted(digests)},
    }
    manifest_bytes = json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8")
    (out_root / MANIFEST_FILENAME).write_bytes(manifest_bytes)

    return {
        "out_root": str(out_root),
        "dgps": len(layout.dgps),
        "data_files": layout.n_data_files,
        "files_written": written,
        "manifest_digest": _digest(manifest_bytes),
        "manifest_path": str(out_root / MANIFEST_FILENAME),
        "digests": manifest["files"],
    }


def validate_challenge_tree(root, layout: ChallengeLayout | None = None) -> dict:
    """Structural walker: verify folders, file sets, and row counts.

    With a layout, checks exactly that plan; without one, reconstructs the
    plan from the manifest. Raises ValidationError naming the first offending
    path; returns summary counts on success.
    """
    root = Path(root)
    if layout is None:
        manifest_path = root / MANIFEST_FILENAME
        if not manifest_path.exists():
            raise ValidationError(f"{root}: no manifest and no layout given")
        m = json.loads(manifest_path.read_text(encoding="utf-8"))
        layout = ChallengeLayout(
            n=m["n"],
            master_seed=m["master_seed"],
            families=tuple(m["families"]),
            settings=tuple(m["settings"]),
            replicates=m["replicates"],
            z_policy=m["z_policy"],
        )

    x_path = root / COVARIATE_FILENAME
    table = load_covariate_table(x_path)
    if table.n != layout.n:
        raise ValidationError(f"{x_path}: has {table.n} rows, layout expects {layout.n}")

    replicate_files = 0
    for code in layout.dgps:
        folder = root / code.family / code.bits
        if not folder.is_dir():
            raise ValidationError(f"missing DGP folder {folder}")
        truth = read_ground_truth(folder / TRUTH_FILENAME)
        if truth.alpha.shape[0] != layout.n:
            raise ValidationError(
                f"{folder / TRUTH_FILENAME}: has {truth.alpha.shape[0]} rows, expected {layout.n}"
            )
        for rep_id in range(1, layout.replicates + 1):
            path = folder / f"{rep_id}.csv"
            z, y = read_replicate(path)
            if z.shape[0] != layout.n:
                raise ValidationError(f"{path}: has {z.shape[0]} rows, expected {layout.n}")
            replicate_files += 1

    return {
        "dgps": len(layout.dgps),
        "replicate_files": replicate_files,
        "data_files": replicate_files + len(layout.dgps),
        "n": layout.n,
    }
