"""Seeded generators: labelled families of short series and synthetic recordings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidSpec, OverlapError
from .spectral import TimeSeries, TimeSeriesSet, standardize_rows
from .spikes import Recording

AR_BURN_IN = 100
SINE_RMS = 1 / np.sqrt(2)

CLASS_KINDS = ("white_noise", "ar1", "noisy_sine")


@dataclass(frozen=True)
class ClassSpec:
    """One generating process.

    ``freq`` is in cycles per sample, so it lives in (0, 0.5). A missing
    ``noise_sd`` for a sine means signal-to-noise 1, i.e. the sine's RMS.
    """

    kind: str
    phi: float = 0.0
    freq: float = 0.0
    noise_sd: float | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in CLASS_KINDS:
            raise InvalidSpec(f"unknown class kind {self.kind!r}; expected one of {CLASS_KINDS}")
        if self.kind == "ar1" and not abs(self.phi) < 1:
            raise InvalidSpec(f"AR(1) needs |phi| < 1, got {self.phi}")
        if self.kind == "noisy_sine":
            if not 0 < self.freq < 0.5:
                raise InvalidSpec(f"sine frequency must lie in (0, 0.5), got {self.freq}")
            if self.noise_sd is not None and self.noise_sd < 0:
                raise InvalidSpec(f"noise_sd must be >= 0, got {self.noise_sd}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "ar1":
            return f"ar1_{self.phi:g}"
        if self.kind == "noisy_sine":
            return f"sine_{self.freq:g}"
        return self.kind

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "ar1":
            d["phi"] = self.phi
        if self.kind == "noisy_sine":
            d["freq"] = self.freq
            d["noise_sd"] = self.noise_sd
        if self.name:
            d["name"] = self.name
        return d


@dataclass(frozen=True)
class SimSpec:
    classes: tuple[ClassSpec, ...]
    n: int = 100
    T: int = 50
    seed: int = 0

    def __post_init__(self):
        classes = tuple(c if isinstance(c, ClassSpec) else ClassSpec(**c) for c in self.classes)
        object.__setattr__(self, "classes", classes)
        if not classes:
            raise InvalidSpec("a simulation needs at least one class")
        if self.n < 1:
            raise InvalidSpec(f"n must be >= 1, got {self.n}")
        if self.T < 8:
            raise InvalidSpec(f"T must be >= 8, got {self.T}")

    @classmethod
    def from_dict(cls, d: dict) -> "SimSpec":
        try:
            return cls(
                classes=tuple(ClassSpec(**c) for c in d["classes"]),
                n=int(d.get("n", 100)),
                T=int(d.get("T", 50)),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"malformed simulation spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {"classes": [c.to_dict() for c in self.classes], "n": self.n, "T": self.T, "seed": self.seed}


@dataclass
class LabeledSet:
    data: TimeSeriesSet
    labels: np.ndarray  # integer class index per series
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.size != self.data.n_series:
            raise InvalidSpec(f"{self.labels.size} labels for {self.data.n_series} series")


def sim4_spec(n: int = 100, T: int = 50, seed: int = 0) -> SimSpec:
    """White noise, AR(1) at 0.5 and 0.75, and noisy sines at 0.1 and 0.2."""
    return SimSpec(
        classes=(
            ClassSpec("white_noise"),
            ClassSpec("ar1", phi=0.5),
            ClassSpec("ar1", phi=0.75),
            ClassSpec("noisy_sine", freq=0.1),
            ClassSpec("noisy_sine", freq=0.2),
        ),
        n=n,
        T=T,
        seed=seed,
    )


def _series_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def simulate_class(cls: ClassSpec, T: int, rng: np.random.Generator) -> np.ndarray:
    if cls.kind == "white_noise":
        return rng.standard_normal(T)
    if cls.kind == "ar1":
        eps = rng.standard_normal(T + AR_BURN_IN)
        x = np.empty_like(eps)
        prev = 0.0
        for t, e in enumerate(eps):
            prev = cls.phi * prev + e
            x[t] = prev
        return x[AR_BURN_IN:]
    noise_sd = SINE_RMS if cls.noise_sd is None else cls.noise_sd
    t = np.arange(T)
    return np.sin(2 * np.pi * cls.freq * t) + noise_sd * rng.standard_normal(T)


def generate(spec: SimSpec, standardize: bool = True) -> LabeledSet:
    """Draw ``spec.n`` series per class; series ``i`` uses its own seeded stream."""
    rows = []
    labels = []
    names = []
    index = 0
    for c, cls in enumerate(spec.classes):
        for m in range(spec.n):
            rows.append(simulate_class(cls, spec.T, _series_rng(spec.seed, index)))
            labels.append(c)
            names.append(f"{cls.label}_{m}")
            index += 1
    values = np.vstack(rows)
    if standardize:
        values = standardize_rows(values)
    data = TimeSeriesSet(values, labels=names, standardized=standardize)
    return LabeledSet(data, labels, [c.label for c in spec.classes])


@dataclass
class SyntheticRecording:
    recording: Recording
    onsets: np.ndarray
    template_ids: np.ndarray


def synth_recording(
    templates: Sequence[TimeSeries | Sequence[float]],
    onsets: Sequence[int],
    noise_sd: float,
    length: int,
    template_ids: Sequence[int] | None = None,
    seed: int = 0,
) -> SyntheticRecording:
    """Add templates at ``onsets`` to iid Gaussian noise of sd ``noise_sd``.

    ``template_ids`` defaults to cycling through the templates in order.
    """
    arrays = [np.asarray(getattr(t, "values", t), dtype=float) for t in templates]
    onsets = np.asarray(onsets, dtype=int)
    if len(arrays) == 0 and onsets.size:
        raise InvalidSpec("onsets given without templates")
    if template_ids is None:
        template_ids = np.arange(onsets.size) % max(len(arrays), 1)
    template_ids = np.asarray(template_ids, dtype=int)
    if template_ids.size != onsets.size:
        raise InvalidSpec(f"{template_ids.size} template ids for {onsets.size} onsets")
    if noise_sd < 0:
        raise InvalidSpec(f"noise_sd must be >= 0, got {noise_sd}")
    order = np.argsort(onsets, kind="stable")
    onsets, template_ids = onsets[order], template_ids[order]

    rng = np.random.default_rng(seed)
    y = noise_sd * rng.standard_normal(length)
    end_prev = 0
    for onset, tid in zip(onsets, template_ids):
        if not 0 <= tid < len(arrays):
            raise InvalidSpec(f"template id {tid} out of range")
        tmpl = arrays[tid]
        if onset < end_prev:
            raise OverlapError(f"template at {onset} overlaps the previous one ending at {end_prev}")
        if onset < 0 or onset + tmpl.size > length:
            raise OverlapError(f"template at {onset} does not fit in a recording of length {length}")
        y[onset : onset + tmpl.size] += tmpl
        end_prev = onset + tmpl.size
    return SyntheticRecording(Recording(y), onsets, template_ids)


def demo_templates(T: int = 55, snr: float = 5.0, noise_sd: float = 1.0) -> list[TimeSeries]:
    """Three smooth spike shapes peaking at ``T // 2``: narrow bump, biphasic, damped wave.

    Each is scaled so its RMS over the window is ``snr * noise_sd``.
    """
    t = np.arange(T)
    c = T // 2

    def bump(center, width):
        return np.exp(-((t - center) ** 2) / (2.0 * width * width))

    shapes = [
        bump(c, 4.0),
        bump(c, 3.0) - 0.6 * bump(c + 9, 6.0),
        bump(c, 7.0) * np.cos(2 * np.pi * (t - c) / 22.0),
    ]
    return [TimeSeries(s / np.sqrt(np.mean(s**2)) * snr * noise_sd) for s in shapes]


def spike_train(
    templates: Sequence[TimeSeries | Sequence[float]],
    count_per_template: int,
    noise_sd: float = 1.0,
    min_gap: int = 150,
    max_gap: int = 300,
    seed: int = 0,
) -> SyntheticRecording:
    """Shuffled occurrences of every template with random gaps between onsets."""
    if not 0 < min_gap <= max_gap:
        raise InvalidSpec(f"need 0 < min_gap <= max_gap, got {min_gap}, {max_gap}")
    longest = max(len(getattr(t, "values", t)) for t in templates)
    if min_gap < longest:
        raise OverlapError(f"min_gap {min_gap} is shorter than the template length {longest}")
    rng = np.random.default_rng([seed, 1])
    ids = rng.permutation(np.repeat(np.arange(len(templates)), count_per_template))
    onsets = np.cumsum(rng.integers(min_gap, max_gap + 1, size=ids.size))
    length = int(onsets[-1] + max_gap) if ids.size else max_gap
    return synth_recording(templates, onsets, noise_sd, length, template_ids=ids, seed=seed)


def recording_from_dict(d: dict) -> SyntheticRecording:
    """Build a synthetic recording from a JSON-style description.

    ``templates`` is either a list of sample lists or ``"demo"``; placement is
    either explicit (``onsets`` plus optional ``template_ids`` and ``length``)
    or random (``count_per_template``, ``min_gap``, ``max_gap``).
    """
    try:
        noise_sd = float(d.get("noise_sd", 1.0))
        seed = int(d.get("seed", 0))
        spec = d.get("templates", "demo")
        if spec == "demo":
            templates = demo_templates(int(d.get("window", 55)), float(d.get("snr", 5.0)), noise_sd)
        else:
            templates = [np.asarray(t, dtype=float) for t in spec]
        if "onsets" in d:
            return synth_recording(
                templates, d["onsets"], noise_sd, int(d["length"]), d.get("template_ids"), seed
            )
        return spike_train(
            templates,
            int(d["count_per_template"]),
            noise_sd,
            int(d.get("min_gap", 150)),
            int(d.get("max_gap", 300)),
            seed,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"malformed recording spec: {exc}") from exc
