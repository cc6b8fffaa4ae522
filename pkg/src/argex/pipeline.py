"""Two-pass orchestration: difficulty estimation, reordering, prediction.

A run processes each document twice. The first pass goes front to back,
caches its predictions in the document memory, and records per-argument
first-token logits. A temperature fitted on the validation split turns
those logits into calibrated probabilities, the per-event difficulties
reorder the document from simple to complex, and the second pass predicts
in the new order with a memory rebuilt from scratch, optionally pruning
decoding constraints by confidence bounds.

Documents are independent units of work and may run concurrently; within
a document, events are strictly sequential because of the memory.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import protocol
from .calibration import (
    DEFAULT_BINS,
    DEFAULT_GRID,
    CalibrationReport,
    LogitVector,
    build_report,
    first_token_confidence,
    scale,
    write_report,
)
from .constraints import (
    Bounds,
    ConstraintRule,
    derive_banned,
    derive_banned_all,
    load_rules,
    select_bounds,
)
from .corpus import parse_corpus
from .errors import ConfigError, GeneratorError, PipelineError
from .evaluation import head_match, metrics_table
from .generator import (
    GenerateRequest,
    Generator,
    MockGenerator,
    OracleGenerator,
    RemoteGenerator,
    validate_response,
)
from .memory import DocumentMemory, Embedder, HashedBagEmbedder, PrecomputedEmbedder
from .ontology import Ontology, load_ontology
from .scheduling import PredictionSchedule, argument_difficulties, event_difficulty, reorder, schedule_row
from .sequences import context_query_text, render_input
from .types import Document, EventPrediction

logger = logging.getLogger(__name__)

CONDITIONS = ("f2b-m", "f2b-m-c", "s2c", "s2c-cd")
MODE_ONE_MODEL = "R1"  # difficulty pass retrieves from memory
MODE_TWO_MODEL = "R2"  # difficulty pass omits the retrieved segment

CONSTRAINTS_OFF = "off"
CONSTRAINTS_BOUNDED = "bounded"
CONSTRAINTS_ALL = "all"


@dataclass(frozen=True)
class PassOptions:
    window: int = 384
    top_k: int = 50
    retrieval: bool = True
    temperature: float = 1.0
    constraints: str = CONSTRAINTS_OFF
    rules: tuple[ConstraintRule, ...] = ()
    bounds: Bounds | None = None


def run_pass(
    doc: Document,
    ontology: Ontology,
    generator: Generator,
    embedder: Embedder,
    order: Sequence[int],
    options: PassOptions,
) -> list[EventPrediction]:
    """Predict the document's events in the given order, growing the memory.

    Aborts on the first generator failure; partial per-document results are
    discarded and the error names the document and event.
    """
    memory = DocumentMemory(doc_id=doc.doc_id, embedder=embedder)
    predictions = []
    for position, appearance_index in enumerate(order, start=1):
        event = doc.event(appearance_index)
        template = ontology.template(event.event_type)
        sequence = render_input(event, doc, template, retrieved=None, window=options.window)
        if options.retrieval:
            retrieved = memory.retrieve(context_query_text(sequence))
            if retrieved is not None:
                sequence = dataclasses.replace(sequence, retrieved_text=retrieved.filled_text)

        if options.constraints == CONSTRAINTS_BOUNDED:
            if options.bounds is None:
                raise ConfigError("bounded constraints need bounds")
            banned = derive_banned(memory, options.rules, options.bounds)
        elif options.constraints == CONSTRAINTS_ALL:
            banned = derive_banned_all(memory, options.rules)
        else:
            banned = {}

        request = GenerateRequest(
            input=sequence,
            template=template,
            event_ref=(doc.doc_id, appearance_index),
            banned=banned,
            top_k=options.top_k,
        )
        try:
            response = generator.generate(request)
        except GeneratorError as exc:
            raise PipelineError(
                f"generator failed on ({doc.doc_id}, event {appearance_index}): {exc}",
                doc_id=doc.doc_id,
                appearance_index=appearance_index,
            ) from exc
        diagnostics = validate_response(response, request)
        if diagnostics:
            raise PipelineError(
                f"invalid generator response on ({doc.doc_id}, event {appearance_index}): "
                + "; ".join(diagnostics),
                doc_id=doc.doc_id,
                appearance_index=appearance_index,
            )

        arguments = tuple(
            dataclasses.replace(
                arg, calibrated_prob=first_token_confidence(arg, options.temperature)
            )
            for arg in response.arguments
        )
        prediction = EventPrediction(
            event_ref=(doc.doc_id, appearance_index),
            filled_text=response.filled_text,
            arguments=arguments,
            prediction_order=position,
        )
        memory.cache(prediction)
        predictions.append(prediction)
    return predictions


def first_inference(
    doc: Document,
    ontology: Ontology,
    generator: Generator,
    embedder: Embedder,
    mode: str = MODE_ONE_MODEL,
    window: int = 384,
    top_k: int = 50,
) -> list[EventPrediction]:
    """Front-to-back difficulty pass; records raw probabilities and logits."""
    if mode not in (MODE_ONE_MODEL, MODE_TWO_MODEL):
        raise ConfigError(f"unknown inference mode {mode!r}")
    order = [event.appearance_index for event in doc.events]
    options = PassOptions(
        window=window, top_k=top_k, retrieval=(mode == MODE_ONE_MODEL), temperature=1.0
    )
    return run_pass(doc, ontology, generator, embedder, order, options)


def difficulty_vector(
    predictions: Sequence[EventPrediction], temperature: float, calibrated: bool = True
) -> list[float]:
    """Per-event difficulties in appearance order.

    Reordering by uncalibrated probabilities (calibrated=False) is a
    diagnostic ablation; production scheduling always calibrates first.
    """
    by_index = {p.appearance_index: p for p in predictions}
    difficulties = []
    for index in sorted(by_index):
        prediction = by_index[index]
        if calibrated:
            probs = [first_token_confidence(arg, temperature) for arg in prediction.arguments]
        else:
            probs = [arg.raw_prob for arg in prediction.arguments]
        difficulties.append(event_difficulty(argument_difficulties(probs)))
    return difficulties


def second_inference(
    doc: Document,
    ontology: Ontology,
    schedule: PredictionSchedule,
    generator: Generator,
    embedder: Embedder,
    temperature: float,
    window: int = 384,
    top_k: int = 50,
    constraints: str = CONSTRAINTS_OFF,
    rules: tuple[ConstraintRule, ...] = (),
    bounds: Bounds | None = None,
) -> list[EventPrediction]:
    """Predict in schedule order with a memory rebuilt from scratch."""
    if len(schedule) != len(doc.events):
        raise ConfigError(
            f"schedule covers {len(schedule)} events, document has {len(doc.events)}"
        )
    options = PassOptions(
        window=window,
        top_k=top_k,
        retrieval=True,
        temperature=temperature,
        constraints=constraints,
        rules=rules,
        bounds=bounds,
    )
    return run_pass(doc, ontology, generator, embedder, schedule.sequence(), options)


def label_arguments(
    prediction: EventPrediction, doc: Document
) -> list[tuple[LogitVector, bool]]:
    """Correctness-labeled logits for calibration fitting.

    An argument counts as correct when some informative gold argument of the
    event shares its head word and role.
    """
    event = doc.event(prediction.appearance_index)
    golds = [g for g in event.gold_arguments if g.informative]
    labeled = []
    for arg in prediction.arguments:
        if arg.first_token_logits is None:
            raise PipelineError(
                f"argument without logits on ({doc.doc_id}, event {event.appearance_index})",
                doc_id=doc.doc_id,
                appearance_index=event.appearance_index,
            )
        correct = any(
            gold.role == arg.role and head_match(arg.text, gold.span, doc) for gold in golds
        )
        labeled.append((arg.first_token_logits, correct))
    return labeled


# ---------------------------------------------------------------------------
# experiment harness


@dataclass(frozen=True)
class RunConfig:
    condition: str
    ontology: str
    test_corpus: str
    out_dir: str
    validation_corpus: str | None = None
    rules: str | None = None
    window: int = 384
    top_k: int = 50
    grid: tuple[float, float, float] = DEFAULT_GRID
    bins: int = DEFAULT_BINS
    bounds: tuple[float, float] | None = None  # overrides select_bounds
    seeds: tuple[int, ...] = (0,)
    generator: str = "mock"  # mock | oracle | remote:<address>
    logit_script: str | None = None
    embedder: str = "hashed"  # hashed | precomputed:<path>
    embed_dim: int = 256
    mode: str = MODE_ONE_MODEL
    uncalibrated_reorder: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(
                f"unknown condition {self.condition!r}; valid conditions: {', '.join(CONDITIONS)}"
            )
        if self.mode not in (MODE_ONE_MODEL, MODE_TWO_MODEL):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RunConfig":
        data = dict(raw)
        for key in ("grid", "bounds"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        if "seeds" in data:
            data["seeds"] = tuple(data["seeds"])
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["grid"] = list(self.grid)
        out["seeds"] = list(self.seeds)
        if self.bounds is not None:
            out["bounds"] = list(self.bounds)
        return out


def build_generator(
    config: RunConfig, seed: int, documents: Mapping[str, Document]
) -> Generator:
    spec = config.generator
    script = _load_logit_script(config.logit_script) if config.logit_script else None
    if spec == "mock":
        return MockGenerator(seed=seed, script=script)
    if spec == "oracle":
        return OracleGenerator(documents=documents, script=script)
    if spec.startswith("remote:"):
        return RemoteGenerator(address=spec.removeprefix("remote:"))
    raise ConfigError(f"unknown generator {spec!r}; use mock, oracle, or remote:<address>")


def build_embedder(config: RunConfig) -> Embedder:
    spec = config.embedder
    if spec == "hashed":
        return HashedBagEmbedder(dim=config.embed_dim)
    if spec.startswith("precomputed:"):
        return PrecomputedEmbedder(spec.removeprefix("precomputed:"))
    raise ConfigError(f"unknown embedder {spec!r}; use hashed or precomputed:<path>")


def _load_logit_script(path: str | Path) -> dict[tuple[str, int, int], list[float]]:
    """Script file: {doc_id: {appearance_index: {slot_id: [logits]}}}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    script = {}
    for doc_id, events in raw.items():
        for index, slots in events.items():
            for slot_id, values in slots.items():
                script[(doc_id, int(index), int(slot_id))] = [float(v) for v in values]
    return script


@dataclass
class SeedResult:
    seed: int
    predictions: dict[tuple[str, int], list]
    rows: list[dict]
    first_pass_rows: list[dict]
    schedules: list[dict]
    validation_rows: list[dict]
    calibration: CalibrationReport | None
    bounds: Bounds | None
    metrics: dict


@dataclass(frozen=True)
class RunResult:
    run_dir: Path
    metrics: dict


def _prediction_row(prediction: EventPrediction) -> dict:
    row = {
        "doc_id": prediction.doc_id,
        "appearance_index": prediction.appearance_index,
        "prediction_order": prediction.prediction_order,
        "filled_text": prediction.filled_text,
        "arguments": [],
    }
    for arg in prediction.arguments:
        logits = arg.first_token_logits
        row["arguments"].append(
            {
                "text": arg.text,
                "slot_id": arg.slot_id,
                "role": arg.role,
                "raw_prob": arg.raw_prob,
                "calibrated_prob": arg.calibrated_prob,
                "top_logits": list(logits.values) if logits else None,
                "residual_logmass": (
                    math.log(logits.residual_mass)
                    if logits and logits.residual_mass > 0.0
                    else None
                ),
            }
        )
    return row


def _run_seed(
    config: RunConfig,
    seed: int,
    ontology: Ontology,
    test_docs: list[Document],
    validation_docs: list[Document],
    rules: tuple[ConstraintRule, ...],
) -> SeedResult:
    documents = {d.doc_id: d for d in [*validation_docs, *test_docs]}
    generator = build_generator(config, seed, documents)
    embedder = build_embedder(config)
    needs_calibration = config.condition in ("s2c", "s2c-cd")

    report = None
    validation_rows: list[dict] = []
    temperature = 1.0
    entries: list[tuple[LogitVector, bool]] = []
    if needs_calibration:
        if not validation_docs:
            raise ConfigError(f"condition {config.condition!r} needs a validation corpus")
        for doc in validation_docs:
            for prediction in first_inference(
                doc, ontology, generator, embedder, config.mode, config.window, config.top_k
            ):
                for logits, correct in label_arguments(prediction, doc):
                    entries.append((logits, correct))
                    validation_rows.append(
                        {
                            "doc_id": prediction.doc_id,
                            "appearance_index": prediction.appearance_index,
                            "values": list(logits.values),
                            "residual_logmass": (
                                math.log(logits.residual_mass)
                                if logits.residual_mass > 0.0
                                else None
                            ),
                            "correct": correct,
                        }
                    )
        if not entries:
            raise ConfigError("validation pass produced no arguments to calibrate on")
        report = build_report(entries, grid=config.grid, k=config.bins)
        temperature = report.temperature

    bounds = None
    if config.condition == "s2c-cd":
        if config.bounds is not None:
            bounds = Bounds(lower=config.bounds[0], upper=config.bounds[1])
        else:
            assert report is not None
            confidences = [scale(logits, temperature) for logits, _ in entries]
            bounds = select_bounds(confidences, config.bins, report.bins_after)
        logger.info("seed %d: bounds %s", seed, bounds)

    def process(doc: Document):
        if config.condition == "f2b-m":
            final = run_pass(
                doc,
                ontology,
                generator,
                embedder,
                [e.appearance_index for e in doc.events],
                PassOptions(window=config.window, top_k=config.top_k, retrieval=True),
            )
            return final, None, None
        if config.condition == "f2b-m-c":
            final = run_pass(
                doc,
                ontology,
                generator,
                embedder,
                [e.appearance_index for e in doc.events],
                PassOptions(
                    window=config.window,
                    top_k=config.top_k,
                    retrieval=True,
                    constraints=CONSTRAINTS_ALL,
                    rules=rules,
                ),
            )
            return final, None, None
        first = first_inference(
            doc, ontology, generator, embedder, config.mode, config.window, config.top_k
        )
        difficulties = difficulty_vector(
            first, temperature, calibrated=not config.uncalibrated_reorder
        )
        schedule = reorder(difficulties)
        constraints = CONSTRAINTS_BOUNDED if config.condition == "s2c-cd" else CONSTRAINTS_OFF
        final = second_inference(
            doc,
            ontology,
            schedule,
            generator,
            embedder,
            temperature,
            window=config.window,
            top_k=config.top_k,
            constraints=constraints,
            rules=rules,
            bounds=bounds,
        )
        return final, first, (difficulties, schedule)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(process, test_docs))
    else:
        results = [process(doc) for doc in test_docs]

    predictions: dict[tuple[str, int], list] = {}
    rows = []
    first_pass_rows = []
    schedules = []
    for doc, (final, first, scheduling) in zip(test_docs, results):
        for prediction in final:
            predictions.setdefault(prediction.event_ref, []).extend(prediction.arguments)
            rows.append(_prediction_row(prediction))
        if first is not None:
            first_pass_rows.extend(_prediction_row(p) for p in first)
        if scheduling is not None:
            difficulties, schedule = scheduling
            schedules.append(
                schedule_row(
                    doc.doc_id,
                    difficulties,
                    PredictionSchedule.front_to_back(len(doc.events)),
                    schedule,
                )
            )

    metrics = metrics_table(predictions, {d.doc_id: d for d in test_docs})
    return SeedResult(
        seed=seed,
        predictions=predictions,
        rows=rows,
        first_pass_rows=first_pass_rows,
        schedules=schedules,
        validation_rows=validation_rows,
        calibration=report,
        bounds=bounds,
        metrics=metrics,
    )


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")


def load_predictions(path: str | Path):
    """Read a predictions.jsonl back into the mapping the scorer consumes."""
    from .types import ArgumentPrediction

    predictions: dict[tuple[str, int], list[ArgumentPrediction]] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            row = json.loads(line)
            key = (row["doc_id"], row["appearance_index"])
            predictions.setdefault(key, []).extend(
                ArgumentPrediction(
                    text=arg["text"],
                    slot_id=arg["slot_id"],
                    role=arg["role"],
                    raw_prob=arg.get("raw_prob"),
                    calibrated_prob=arg.get("calibrated_prob"),
                )
                for arg in row["arguments"]
            )
    return predictions


def run_experiment(config: RunConfig) -> RunResult:
    """Run one named condition end to end and write the run artifact.

    Deterministic given the seeds and generator: rerunning the same config
    produces byte-identical artifact files.
    """
    ontology = load_ontology(config.ontology)
    test_docs = parse_corpus(config.test_corpus, ontology)
    validation_docs = (
        parse_corpus(config.validation_corpus, ontology) if config.validation_corpus else []
    )
    rules = load_rules(config.rules) if config.rules else ()

    run_dir = Path(config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    per_seed = {}
    for seed in config.seeds:
        logger.info("running condition %s with seed %d", config.condition, seed)
        result = _run_seed(config, seed, ontology, test_docs, validation_docs, rules)
        seed_dir = run_dir / f"seed_{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        _write_jsonl(seed_dir / "predictions.jsonl", result.rows)
        if result.first_pass_rows:
            _write_jsonl(seed_dir / "first_pass.jsonl", result.first_pass_rows)
        if result.validation_rows:
            _write_jsonl(seed_dir / "validation_log.jsonl", result.validation_rows)
        if result.schedules:
            (seed_dir / "schedules.json").write_text(
                json.dumps(result.schedules, sort_keys=True, indent=2) + "\n"
            )
        if result.calibration is not None:
            write_report(result.calibration, seed_dir / "calibration.json")
        if result.bounds is not None:
            (seed_dir / "bounds.json").write_text(
                json.dumps(
                    {"lower": result.bounds.lower, "upper": result.bounds.upper},
                    sort_keys=True,
                )
                + "\n"
            )
        per_seed[str(seed)] = result.metrics

    metrics = {"condition": config.condition, "seeds": per_seed, "mean": _mean_metrics(per_seed)}
    (run_dir / "metrics.json").write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    provenance = dict(config.to_dict())
    provenance["calibration_fit_split"] = "validation"
    provenance["calibration_applied_to"] = "test"
    provenance["protocol_version"] = protocol.PROTOCOL_VERSION
    (run_dir / "config.json").write_text(json.dumps(provenance, sort_keys=True, indent=2) + "\n")
    return RunResult(run_dir=run_dir, metrics=metrics)


def _mean_metrics(per_seed: Mapping[str, dict]) -> dict:
    """Average the numeric leaves of the per-seed metric tables."""
    seeds = list(per_seed.values())

    def combine(values):
        if all(isinstance(v, dict) for v in values):
            return {key: combine([v[key] for v in values]) for key in values[0]}
        return sum(values) / len(values)

    return combine(seeds)
