"""Response scale, focal-value contraction, and survey dataset containers.

Everything downstream (canonical fits, the multinomial system, the
de-biasing pipeline, and the numeracy mixture model) consumes the
immutable :class:`SurveyDataset` defined here.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .errors import DataError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResponseScale:
    """Integer response scale with a designated focal subset.

    The default is the 11-point (0-10) scale with focal values {0, 5, 10}.
    A 10-point (1-10) variant is supported by passing min_value=1 and a
    three-element focal set with both endpoints and one interior value.
    """

    min_value: int = 0
    max_value: int = 10
    focal_set: tuple[int, ...] = (0, 5, 10)

    def __post_init__(self):
        if self.min_value not in (0, 1) or self.max_value != 10:
            raise DataError(
                f"unsupported scale [{self.min_value}, {self.max_value}]; "
                "expected 0-10 or 1-10"
            )
        focal = tuple(sorted(set(int(v) for v in self.focal_set)))
        object.__setattr__(self, "focal_set", focal)
        if len(focal) != 3:
            raise DataError("focal_set must contain exactly three values")
        if focal[0] != self.min_value or focal[-1] != self.max_value:
            raise DataError("focal_set must contain both scale endpoints")
        if not (self.min_value < focal[1] < self.max_value):
            raise DataError("focal_set interior value must be strictly inside the scale")

    @property
    def n_categories(self) -> int:
        return self.max_value - self.min_value + 1

    @property
    def values(self) -> np.ndarray:
        """All admissible response values, ascending."""
        return np.arange(self.min_value, self.max_value + 1)

    def position(self, s) -> np.ndarray:
        """Category position (0-based index into :attr:`values`)."""
        return np.asarray(s) - self.min_value


@dataclass(frozen=True)
class ContractionMap:
    """Partition of the scale into groups, each collapsing onto its focal member.

    The default on the 0-10 scale maps {0,1,2}->0, {3,4,5,6,7}->5 and
    {8,9,10}->10, i.e. every response goes to its nearest focal value.
    """

    scale: ResponseScale
    groups: tuple[tuple[frozenset[int], int], ...]

    def __post_init__(self):
        members = [m for g, _ in self.groups for m in g]
        if sorted(members) != list(self.scale.values):
            raise DataError("contraction groups must partition the scale")
        targets = []
        for group, target in self.groups:
            focal_in_group = [v for v in group if v in self.scale.focal_set]
            if focal_in_group != [target]:
                raise DataError(
                    f"group {sorted(group)} must contain exactly its focal target {target}"
                )
            targets.append(target)
        if tuple(sorted(targets)) != self.scale.focal_set:
            raise DataError("contraction image must equal the focal set")

    @classmethod
    def nearest_focal(cls, scale: ResponseScale | None = None) -> "ContractionMap":
        """Build the map sending each value to its nearest focal value.

        Ties (equidistant between two focal values) go to the lower target;
        the default 0-10 scale has no ties.
        """
        scale = scale or ResponseScale()
        focal = np.asarray(scale.focal_set)
        buckets: dict[int, set[int]] = {int(t): set() for t in focal}
        for v in scale.values:
            target = int(focal[np.argmin(np.abs(focal - v))])
            buckets[target].add(int(v))
        groups = tuple(
            (frozenset(buckets[int(t)]), int(t)) for t in focal
        )
        return cls(scale=scale, groups=groups)

    def target_of(self, s: int) -> int:
        for group, target in self.groups:
            if s in group:
                return target
        raise DataError(f"response {s} outside scale")

    def group_of(self, focal_value: int) -> frozenset[int]:
        for group, target in self.groups:
            if target == focal_value:
                return group
        raise DataError(f"{focal_value} is not a focal value")

    def as_array(self) -> np.ndarray:
        """Vector t where t[position(s)] is the contraction target of s."""
        out = np.empty(self.scale.n_categories, dtype=int)
        for group, target in self.groups:
            for v in group:
                out[v - self.scale.min_value] = target
        return out


def contract(s, cmap: ContractionMap):
    """Map response(s) onto the focal subset; idempotent by construction."""
    arr = np.asarray(s)
    if np.any(arr < cmap.scale.min_value) or np.any(arr > cmap.scale.max_value):
        raise DataError("response outside scale")
    mapped = cmap.as_array()[arr - cmap.scale.min_value]
    if np.isscalar(s) or arr.ndim == 0:
        return int(mapped)
    return mapped


@dataclass(frozen=True)
class SurveyDataset:
    """Immutable bundle of responses, covariates, and observation weights.

    covariates is an N x K float matrix; covariate_names gives the column
    order.  numeracy_covariates names the (possibly identical) subset used
    as numeracy predictors by the mixture model.  pair_indicator is only
    set on response-pair subsets and flags "chose the higher response".
    """

    responses: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple[str, ...]
    weights: np.ndarray
    scale: ResponseScale = field(default_factory=ResponseScale)
    numeracy_covariates: tuple[str, ...] = ()
    pair_indicator: np.ndarray | None = None
    n_dropped: int = 0

    def __post_init__(self):
        responses = np.asarray(self.responses, dtype=int)
        covariates = np.atleast_2d(np.asarray(self.covariates, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "weights", weights)
        n = responses.shape[0]
        if n < 1:
            raise DataError("dataset must contain at least one row")
        if covariates.shape[0] != n or weights.shape[0] != n:
            raise DataError("responses, covariates and weights must align")
        if covariates.shape[1] != len(self.covariate_names):
            raise DataError("covariate_names must match the covariate matrix width")
        if not np.all(np.isfinite(covariates)):
            raise DataError("covariates contain non-finite entries")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DataError("weights must be finite and nonnegative")
        if weights.sum() <= 0:
            raise DataError("weight sum must be positive")
        lo, hi = self.scale.min_value, self.scale.max_value
        if responses.min() < lo or responses.max() > hi:
            raise DataError(f"responses outside scale [{lo}, {hi}]")
        unknown = set(self.numeracy_covariates) - set(self.covariate_names)
        if unknown:
            raise DataError(f"numeracy covariates not in dataset: {sorted(unknown)}")
        # freeze array contents so shared datasets are safe across workers
        for arr in (responses, covariates, weights):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.covariate_names.index(name)
        except ValueError:
            raise DataError(f"unknown covariate {name!r}") from None
        return self.covariates[:, j]

    def design(self, names=None) -> tuple[np.ndarray, tuple[str, ...]]:
        """Covariate submatrix (no intercept) in the requested column order."""
        names = tuple(names) if names is not None else self.covariate_names
        cols = [self.column(nm) for nm in names]
        return np.column_stack(cols), names

    def numeracy_design(self) -> tuple[np.ndarray, tuple[str, ...]]:
        names = self.numeracy_covariates or self.covariate_names
        return self.design(names)


def load_dataset(path, schema, scale: ResponseScale | None = None) -> SurveyDataset:
    """Read a comma-separated file (header row, UTF-8) into a SurveyDataset.

    schema maps dataset roles onto file columns::

        {"response": "swl",
         "covariates": {"lnincome": "ln_hh_income", "education4": "educ"},
         "numeracy_covariates": ["lnincome", "education4"],   # optional
         "weight": "wt"}                                      # optional

    Rows with a missing response or a missing mapped covariate are dropped
    (listwise deletion); the drop count is logged and recorded on the
    returned dataset.  Responses outside the scale are dropped as well.
    """
    scale = scale or ResponseScale()
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    response_col = schema.get("response")
    if response_col is None:
        raise DataError("schema must name a 'response' column")
    cov_map = dict(schema.get("covariates", {}))
    weight_col = schema.get("weight")
    needed = [response_col, *cov_map.values()] + ([weight_col] if weight_col else [])
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise DataError(f"columns missing from {path}: {missing}")

    n_raw = len(frame)
    used = frame[needed].apply(pd.to_numeric, errors="coerce")
    used = used.dropna()
    resp = used[response_col]
    in_range = (resp == resp.round()) & (resp >= scale.min_value) & (resp <= scale.max_value)
    used = used[in_range]
    n_dropped = n_raw - len(used)
    if n_dropped:
        log.info("load_dataset: dropped %d of %d rows (missing or out of range)",
                 n_dropped, n_raw)
    if len(used) == 0:
        raise DataError(f"zero rows surviving filters in {path}")

    names = tuple(cov_map.keys())
    covariates = used[[cov_map[nm] for nm in names]].to_numpy(dtype=float)
    weights = (used[weight_col].to_numpy(dtype=float) if weight_col
               else np.ones(len(used)))
    numeracy = tuple(schema.get("numeracy_covariates", ()))
    return SurveyDataset(
        responses=used[response_col].to_numpy(dtype=int),
        covariates=covariates,
        covariate_names=names,
        weights=weights,
        scale=scale,
        numeracy_covariates=numeracy,
        n_dropped=n_dropped,
    )


@dataclass(frozen=True)
class DropFocal:
    """Keep rows whose response is not a focal value."""


@dataclass(frozen=True)
class ResponseRange:
    """Keep rows with low <= response <= high."""

    low: int
    high: int


@dataclass(frozen=True)
class ResponsePair:
    """Keep rows with response in {low, low + 1}; attaches a chose-higher flag."""

    low: int


def subset(dataset: SurveyDataset, selector) -> SurveyDataset:
    """Filter a dataset by one of the selector types above.

    Weights and covariates are carried through.  Raises DataError when the
    selection is empty or the selector does not fit the scale.
    """
    scale = dataset.scale
    if isinstance(selector, DropFocal):
        mask = ~np.isin(dataset.responses, scale.focal_set)
        indicator = None
    elif isinstance(selector, ResponseRange):
        if not (scale.min_value <= selector.low <= selector.high <= scale.max_value):
            raise DataError(f"range [{selector.low}, {selector.high}] outside scale")
        mask = (dataset.responses >= selector.low) & (dataset.responses <= selector.high)
        indicator = None
    elif isinstance(selector, ResponsePair):
        if not (scale.min_value <= selector.low < scale.max_value):
            raise DataError(f"pair ({selector.low}, {selector.low + 1}) outside scale")
        mask = np.isin(dataset.responses, (selector.low, selector.low + 1))
        indicator = (dataset.responses[mask] == selector.low + 1).astype(int)
    else:
        raise DataError(f"unknown selector {selector!r}")

    if not mask.any():
        raise DataError(f"empty subset for {selector!r}")
    return replace(
        dataset,
        responses=dataset.responses[mask],
        covariates=dataset.covariates[mask],
        weights=dataset.weights[mask],
        pair_indicator=indicator,
        n_dropped=0,
    )


EDUCATION_INDICATORS = ("educ_highschool", "educ_postsecondary", "educ_university")


def with_education_indicators(dataset: SurveyDataset,
                              education_col: str = "education4") -> SurveyDataset:
    """Append one-hot education columns (omitted category: level 1).

    Levels 2, 3 and 4 of the ordinal education measure become indicator
    columns, for specifications that do not treat education as continuous.
    """
    educ = dataset.column(education_col).astype(int)
    if educ.min() < 1 or educ.max() > 4:
        raise DataError("education levels must lie in 1..4")
    indicators = np.column_stack([(educ == level).astype(float) for level in (2, 3, 4)])
    return replace(
        dataset,
        covariates=np.column_stack([dataset.covariates, indicators]),
        covariate_names=dataset.covariate_names + EDUCATION_INDICATORS,
    )
