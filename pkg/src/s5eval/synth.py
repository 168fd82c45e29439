"""Deterministic synthetic scenes for metric validation.

A scene is a single-channel mixture of target sources, optional
interferers and optional white background noise, summed sample by sample
(no room simulation). Each source is a band-limited noise burst; sources in
one scene occupy mostly disjoint frequency bands, so even two sources with
the same label are distinguishable.

Levels are set against the background-noise level: a source drawn at
``snr`` dB has exactly ``snr`` dB more energy than the noise (or than the
nominal noise level when no noise is added).

Randomness comes from numpy's PCG64 generator. Every scene seed is split
into independent streams with ``SeedSequence(seed, spawn_key=(stream,))``:

====================  ===============================================
stream                used for
====================  ===============================================
``0``                 SNR draws and band assignment
``1 + k``             target source ``k``
``100 + i``           interferer ``i``
``200``               background noise
====================  ===============================================
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import DEFAULT_GUARDS, NumericGuards, Waveform, energy, sdr
from .errors import SilentReference
from .grouping import DCASE2025_VOCABULARY, K_MAX, LabeledSources, check_label
from .metrics import sdri_matrix
from .wavio import write_wav

STREAM_LEVELS = 0
STREAM_TARGET = 1
STREAM_INTERFERER = 100
STREAM_NOISE = 200

_LOW_HZ = 80.0
_FADE_S = 0.02


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    label_assignment: tuple[str, ...]
    duration_s: float = 10.0
    sample_rate_hz: int = 32000
    target_snr_db_range: tuple[float, float] = (5.0, 20.0)
    n_interference: int = 0
    interference_snr_db_range: tuple[float, float] = (0.0, 15.0)
    noise_floor_db: float = -40.0
    add_noise: bool = True

    def __post_init__(self):
        labels = tuple(check_label(x) for x in self.label_assignment)
        object.__setattr__(self, "label_assignment", labels)
        if not 1 <= len(labels) <= K_MAX:
            raise ValueError(f"need 1..{K_MAX} target labels, got {len(labels)}")
        if not 0 <= self.n_interference <= 2:
            raise ValueError(f"n_interference must be 0..2, got {self.n_interference}")
        for name in ("target_snr_db_range", "interference_snr_db_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is not ordered: {(lo, hi)}")
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("duration and sample rate must be positive")

    @property
    def k_targets(self) -> int:
        return len(self.label_assignment)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


@dataclass(frozen=True)
class Scene:
    spec: SceneSpec
    mixture_ref: Waveform
    references: LabeledSources
    interferers: tuple[Waveform, ...] = ()
    noise: Optional[Waveform] = None
    target_snrs_db: tuple[float, ...] = ()
    interference_snrs_db: tuple[float, ...] = ()


def _bands(n_sources: int, sample_rate: int, rng: np.random.Generator):
    """Log-spaced bands, each widened by 10% into its neighbours, randomly dealt."""
    high = 0.45 * sample_rate
    edges = np.geomspace(_LOW_HZ, high, n_sources + 1)
    bands = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pad = 0.1 * (hi - lo)
        bands.append((max(lo - pad, 20.0), min(hi + pad, 0.5 * sample_rate)))
    order = rng.permutation(n_sources)
    return [bands[i] for i in order]


def _burst(n: int, sample_rate: int, band, rng: np.random.Generator) -> np.ndarray:
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    x = np.fft.irfft(spectrum, n)

    # active for at least half the clip, raised-cosine edges
    length = int(rng.integers(n // 2, n + 1))
    start = int(rng.integers(0, n - length + 1))
    env = np.zeros(n)
    env[start:start + length] = 1.0
    fade = min(int(_FADE_S * sample_rate), length // 2)
    if fade > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
        env[start:start + fade] = ramp
        env[start + length - fade:start + length] = ramp[::-1]
    return x * env


def _scale_to(x: np.ndarray, target_energy: float) -> np.ndarray:
    return x * math.sqrt(target_energy / float(np.dot(x, x)))


def generate_scene(spec: SceneSpec) -> Scene:
    """Build the mixture, references and interferers described by ``spec``."""
    n, sr = spec.n_samples, spec.sample_rate_hz
    levels = stream_rng(spec.seed, STREAM_LEVELS)
    target_snrs = levels.uniform(*spec.target_snr_db_range, size=spec.k_targets)
    interf_snrs = levels.uniform(*spec.interference_snr_db_range, size=spec.n_interference)
    bands = _bands(spec.k_targets + spec.n_interference, sr, levels)
    noise_energy = n * 10.0 ** (spec.noise_floor_db / 10.0)

    targets = []
    for k, snr in enumerate(target_snrs):
        x = _burst(n, sr, bands[k], stream_rng(spec.seed, STREAM_TARGET + k))
        targets.append(_scale_to(x, noise_energy * 10.0 ** (snr / 10.0)))
    interferers = []
    for i, snr in enumerate(interf_snrs):
        x = _burst(n, sr, bands[spec.k_targets + i], stream_rng(spec.seed, STREAM_INTERFERER + i))
        interferers.append(_scale_to(x, noise_energy * 10.0 ** (snr / 10.0)))
    noise = None
    if spec.add_noise:
        noise = _scale_to(stream_rng(spec.seed, STREAM_NOISE).standard_normal(n), noise_energy)

    mixture = np.zeros(n)
    for x in targets + interferers + ([noise] if noise is not None else []):
        mixture = mixture + x

    return Scene(
        spec=spec,
        mixture_ref=Waveform(mixture, sr),
        references=LabeledSources.from_lists(spec.label_assignment, [Waveform(x, sr) for x in targets]),
        interferers=tuple(Waveform(x, sr) for x in interferers),
        noise=None if noise is None else Waveform(noise, sr),
        target_snrs_db=tuple(float(v) for v in target_snrs),
        interference_snrs_db=tuple(float(v) for v in interf_snrs),
    )


def make_estimate_with_sdr(ref: Waveform, target_sdr_db: float, seed: int,
                           guards: NumericGuards = DEFAULT_GUARDS) -> Waveform:
    """Return ``ref`` plus scaled white noise so that ``sdr(result, ref) == target_sdr_db``."""
    ref_energy = energy(ref)
    if not ref_energy > guards.energy_floor:
        raise SilentReference(f"reference energy {ref_energy:.3e} is not above the floor")
    if not target_sdr_db < guards.sdr_cap_db:
        raise ValueError(f"target {target_sdr_db} dB is not below the cap {guards.sdr_cap_db} dB")
    noise = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed))).standard_normal(len(ref))
    beta = math.sqrt(ref_energy / (energy(noise) * 10.0 ** (target_sdr_db / 10.0)))
    return Waveform(ref.samples + beta * noise, ref.sample_rate_hz)


def identity_is_optimal(scene: Scene, estimates: LabeledSources,
                        guards: NumericGuards = DEFAULT_GUARDS) -> bool:
    """True when, within every label, pairing estimate i with reference i is the strict best.

    Assumes ``estimates`` lists the same labels as the references, in the same order.
    """
    refs = scene.references
    for label in set(refs.labels):
        idx = [i for i, x in enumerate(refs.labels) if x == label]
        if len(idx) < 2:
            continue
        scores = sdri_matrix([estimates[i][1] for i in idx], [refs[i][1] for i in idx],
                             scene.mixture_ref, guards)
        diag = math.fsum(scores[i, i] for i in range(len(idx)))
        for p in itertools.permutations(range(len(idx))):
            if p != tuple(range(len(idx))) and math.fsum(scores[i, j] for i, j in enumerate(p)) >= diag:
                return False
    return True


def oracle_estimates(scene: Scene, sdri_targets_db: Sequence[float], seed: int,
                     guards: NumericGuards = DEFAULT_GUARDS) -> LabeledSources:
    """Correctly labeled estimates whose SDRi against their own reference is the given target."""
    refs = scene.references
    if len(sdri_targets_db) != len(refs):
        raise ValueError(f"{len(sdri_targets_db)} targets for {len(refs)} references")
    out = []
    for k, ((label, ref), target) in enumerate(zip(refs, sdri_targets_db)):
        base = sdr(scene.mixture_ref, ref, guards)
        out.append((label, make_estimate_with_sdr(ref, target + base, seed * 16 + k, guards)))
    return LabeledSources(out)


# -- datasets --------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSpec:
    """Parameters for a batch of synthetic scenes with oracle estimates."""

    count: int = 12
    seed: int = 0
    duration_s: float = 10.0
    sample_rate_hz: int = 32000
    k_max: int = K_MAX
    dup_probability: float = 0.4
    max_interference: int = 2
    sdri_range_db: tuple[float, float] = (0.0, 20.0)
    fn_probability: float = 0.0
    fp_probability: float = 0.0
    max_estimates: int = K_MAX
    vocabulary: tuple[str, ...] = DCASE2025_VOCABULARY
    add_noise: bool = True


@dataclass
class SyntheticMixture:
    id: str
    scene: Scene
    estimates: LabeledSources
    sdri_targets_db: tuple[float, ...]
    expected_metric_db: float
    subset: str
    extra: dict = field(default_factory=dict)


def _draw_labels(rng: np.random.Generator, k: int, duplicate: bool, vocabulary) -> tuple[str, ...]:
    if not duplicate or k < 2:
        return tuple(rng.choice(vocabulary, size=k, replace=False).tolist())
    n_unique = int(rng.integers(1, k))
    pool = rng.choice(vocabulary, size=n_unique, replace=False).tolist()
    labels = pool + [pool[int(rng.integers(0, n_unique))] for _ in range(k - n_unique)]
    return tuple(labels[i] for i in rng.permutation(k))


def synthesize_mixture(index: int, ds: DatasetSpec) -> SyntheticMixture:
    """Scene number ``index`` of the dataset, with estimates and its closed-form score.

    Expected score (zero penalties): sum of SDRi targets of kept estimates
    divided by the number of references plus injected false positives.
    Targets are redrawn until the identity pairing is the strict optimum.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(ds.seed, spawn_key=(index,))))
    k = int(rng.integers(1, ds.k_max + 1))
    duplicate = k >= 2 and rng.random() < ds.dup_probability
    labels = _draw_labels(rng, k, duplicate, ds.vocabulary)
    spec = SceneSpec(
        seed=int(rng.integers(0, 2**63 - 1)),
        label_assignment=labels,
        duration_s=ds.duration_s,
        sample_rate_hz=ds.sample_rate_hz,
        n_interference=int(rng.integers(0, ds.max_interference + 1)),
        add_noise=ds.add_noise,
    )
    scene = generate_scene(spec)
    est_seed = int(rng.integers(0, 2**31 - 1))
    for _ in range(100):
        targets = tuple(float(v) for v in rng.uniform(*ds.sdri_range_db, size=k))
        estimates = oracle_estimates(scene, targets, est_seed)
        if identity_is_optimal(scene, estimates):
            break
    else:
        raise RuntimeError(f"could not draw separable targets for scene {index}")

    entries = list(estimates)
    kept = list(targets)
    extra: dict = {}
    if k > 1 and rng.random() < ds.fn_probability:
        drop = int(rng.integers(0, k))
        extra["dropped_estimate"] = drop
        del entries[drop]
        del kept[drop]
    n_fp = 0
    if rng.random() < ds.fp_probability and len(entries) < ds.max_estimates:
        absent = [x for x in ds.vocabulary if x not in labels]
        fp_label = absent[int(rng.integers(0, len(absent)))]
        entries.append((fp_label, scene.mixture_ref))
        extra["false_positive_label"] = fp_label
        n_fp = 1
    expected = math.fsum(kept) / (k + n_fp)
    return SyntheticMixture(
        id=f"mix_{index:05d}",
        scene=scene,
        estimates=LabeledSources(entries),
        sdri_targets_db=targets,
        expected_metric_db=expected,
        subset="DupSet" if duplicate else "NoDupSet",
        extra=extra,
    )


def write_dataset(out_dir, ds: DatasetSpec, wav_format: str = "float64") -> Path:
    """Render ``ds`` as WAV files plus ``manifest.json``; return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mixtures = []
    for index in range(ds.count):
        mix = synthesize_mixture(index, ds)
        sub = out / mix.id
        sub.mkdir(exist_ok=True)
        sr = mix.scene.spec.sample_rate_hz
        write_wav(sub / "mixture.wav", mix.scene.mixture_ref.samples, sr, wav_format)
        refs = []
        for k, (label, w) in enumerate(mix.scene.references):
            name = f"ref{k}_{label}.wav"
            write_wav(sub / name, w.samples, sr, wav_format)
            refs.append({"label": label, "path": f"{mix.id}/{name}"})
        ests = []
        for k, (label, w) in enumerate(mix.estimates):
            name = f"est{k}_{label}.wav"
            write_wav(sub / name, w.samples, sr, wav_format)
            ests.append({"label": label, "path": f"{mix.id}/{name}"})
        mixtures.append({
            "id": mix.id,
            "mixture": f"{mix.id}/mixture.wav",
            "ref_channel_index": 0,
            "references": refs,
            "estimates": ests,
            "subset": mix.subset,
            "expected_metric_db": mix.expected_metric_db,
            "sdri_targets_db": list(mix.sdri_targets_db),
            **mix.extra,
        })
    manifest = {"vocabulary": list(ds.vocabulary), "mixtures": mixtures}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path
