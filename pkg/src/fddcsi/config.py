"""JSON run configuration shared by the CLI subcommands.

Example::

    {
      "data": {"synth": {"scene": {"preset": {"n_scatterers": 4}, "seed": 3},
                         "positions": {"kind": "random", "n": 1000, "seed": 1}}},
      "ul_range": [0, 8], "dl_index": 28,
      "estimators": [{"id": "dnn", "kind": "dnn", "params": {"epochs": 100}}],
      "split": {"kind": "checkerboard", "a": 2.0},
      "seed": 0
    }

``data`` holds either ``{"dataset": "<file.csi>"}`` or a ``synth`` block.
Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .baselines import PrincipalComponentPrecoder, RandomPrecoder
from .dataset import DEFAULT_DL_INDEX, DEFAULT_UL_RANGE, ArrayPose, load_dataset
from .evaluation import DEFAULT_A_VALUES, CheckerboardSplit, RandomSplit
from .exceptions import ConfigError
from .neural import AoaEncoderDecoderPrecoder, DNNPrecoder, EncoderDecoderPrecoder
from .synthgen import FrequencyPlan, Scene, arc_positions, generate_dataset, grid_positions, random_positions

ESTIMATOR_KINDS = {
    "random": (RandomPrecoder, {}),
    "principal": (PrincipalComponentPrecoder, {}),
    "dnn": (DNNPrecoder, {}),
    "dnn_dropout": (DNNPrecoder, {"dropout": 0.25}),
    "encdec": (EncoderDecoderPrecoder, {}),
    "aoa_azimuth": (AoaEncoderDecoderPrecoder, {"mode": "azimuth"}),
    "aoa_azimuth_elevation": (AoaEncoderDecoderPrecoder, {"mode": "azimuth_elevation"}),
}

_TOP_KEYS = {"data", "ul_range", "dl_index", "normalize", "estimators", "split", "sweep", "heatmap", "baseline", "seed"}


@dataclass
class EstimatorConfig:
    id: str
    kind: str
    params: dict = field(default_factory=dict)

    def build(self, seed, array_pose=None):
        cls, preset = ESTIMATOR_KINDS[self.kind]
        params = {**preset, **self.params}
        if "random_state" in cls().get_params() and "random_state" not in params:
            params["random_state"] = seed
        if cls is AoaEncoderDecoderPrecoder and params.get("array_pose") is None:
            if array_pose is None:
                raise ConfigError(f"estimator {self.id!r} needs an array pose (dataset sidecar or params)")
            params["array_pose"] = array_pose.to_dict()
        try:
            return cls(**params)
        except TypeError as err:
            raise ConfigError(f"estimator {self.id!r}: {err}") from None


@dataclass
class RunConfig:
    data: dict
    ul_range: tuple = DEFAULT_UL_RANGE
    dl_index: int = DEFAULT_DL_INDEX
    normalize: bool = False
    estimators: list = field(default_factory=list)
    split: dict | None = None
    sweep: dict = field(default_factory=dict)
    heatmap: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    seed: int = 0
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path, seed=None):
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        return cls.from_dict(doc, base_dir=path.parent, seed=seed)

    @classmethod
    def from_dict(cls, doc, base_dir=".", seed=None):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "data" not in doc:
            raise ConfigError("config needs a 'data' block")
        estimators = []
        for i, e in enumerate(doc.get("estimators", [])):
            if not isinstance(e, dict) or "kind" not in e:
                raise ConfigError(f"estimator #{i} needs a 'kind'")
            estimators.append(EstimatorConfig(e.get("id", e["kind"]), e["kind"], dict(e.get("params", {}))))
        cfg = cls(
            data=doc["data"],
            ul_range=tuple(doc.get("ul_range", DEFAULT_UL_RANGE)),
            dl_index=int(doc.get("dl_index", DEFAULT_DL_INDEX)),
            normalize=bool(doc.get("normalize", False)),
            estimators=estimators,
            split=doc.get("split"),
            sweep=dict(doc.get("sweep", {})),
            heatmap=dict(doc.get("heatmap", {})),
            baseline=dict(doc.get("baseline", {})),
            seed=int(doc.get("seed", 0) if seed is None else seed),
            base_dir=Path(base_dir),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if len(self.ul_range) != 2 or not 0 <= self.ul_range[0] < self.ul_range[1]:
            raise ConfigError(f"invalid ul_range {list(self.ul_range)}")
        if self.ul_range[0] <= self.dl_index < self.ul_range[1]:
            raise ConfigError(f"dl_index {self.dl_index} lies inside ul_range {list(self.ul_range)}")
        if self.dl_index < 0:
            raise ConfigError("dl_index must be non-negative")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not isinstance(self.data, dict) or len({"dataset", "synth"} & set(self.data)) != 1:
            raise ConfigError("data block needs exactly one of 'dataset' or 'synth'")
        ids = [e.id for e in self.estimators]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate estimator ids: {ids}")
        for e in self.estimators:
            if e.kind not in ESTIMATOR_KINDS:
                raise ConfigError(f"unknown estimator kind {e.kind!r}; expected one of {sorted(ESTIMATOR_KINDS)}")
            e.build(self.seed, array_pose=ArrayPose())
        if self.split is not None:
            self.make_split()
        for a in self.sweep.get("a_values", DEFAULT_A_VALUES):
            if not a > 0:
                raise ConfigError(f"square side must be positive, got {a}")
        if "cell_size" in self.heatmap and not self.heatmap["cell_size"] > 0:
            raise ConfigError("heatmap cell_size must be positive")

    def make_split(self, a=None):
        s = dict(self.split or {})
        kind = s.pop("kind", "checkerboard")
        try:
            if kind == "checkerboard":
                side = s.get("a") if a is None else a
                if side is None or not side > 0:
                    raise ConfigError(f"checkerboard split needs a positive square side, got {side}")
                return CheckerboardSplit(float(side), tuple(s.get("origin", (0.0, 0.0))), int(s.get("parity_for_train", 0)))
            if kind == "random":
                return RandomSplit(float(s.get("train_fraction", 0.5)), int(s.get("seed", self.seed)))
        except (ValueError, TypeError) as err:
            raise ConfigError(f"invalid split: {err}") from None
        raise ConfigError(f"unknown split kind {kind!r}")

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def load_data(self):
        """The configured dataset (loaded or synthesized)."""
        if "dataset" in self.data:
            return load_dataset(self.resolve(self.data["dataset"]))
        synth = self.data["synth"]
        scene_doc = synth.get("scene", {})
        scene = Scene.load(self.resolve(scene_doc)) if isinstance(scene_doc, str) else Scene.from_dict(scene_doc)
        plan = FrequencyPlan.from_dict(synth["frequency_plan"]) if "frequency_plan" in synth else FrequencyPlan.from_band()
        positions = make_positions(synth.get("positions", {}))
        return generate_dataset(
            scene, plan, positions,
            n_columns=int(synth.get("n_columns", 32)),
            ul_range=self.ul_range, dl_index=self.dl_index,
            noise_std=float(synth.get("noise_std", 0.0)),
        )

    def to_dict(self):
        return {
            "data": self.data,
            "ul_range": list(self.ul_range),
            "dl_index": self.dl_index,
            "normalize": self.normalize,
            "estimators": [{"id": e.id, "kind": e.kind, "params": e.params} for e in self.estimators],
            "split": self.split,
            "sweep": self.sweep,
            "heatmap": self.heatmap,
            "baseline": self.baseline,
            "seed": self.seed,
        }


def make_positions(doc):
    kind = doc.get("kind", "random")
    z = float(doc.get("z", 1.0))
    kw = {}
    if "x_range" in doc:
        kw["x_range"] = tuple(doc["x_range"])
    if "y_range" in doc:
        kw["y_range"] = tuple(doc["y_range"])
    if kind == "random":
        return random_positions(int(doc.get("n", 1000)), z=z, seed=int(doc.get("seed", 0)), **kw)
    if kind == "grid":
        return grid_positions(spacing=float(doc.get("spacing", 0.2)), z=z, **kw)
    if kind == "arc":
        return arc_positions(int(doc.get("n", 200)), float(doc["radius"]), tuple(doc.get("center", (0.0, 0.0))),
                             tuple(doc.get("azimuth_range", (-1.2, 1.2))), z=z)
    raise ConfigError(f"unknown positions kind {kind!r}")
