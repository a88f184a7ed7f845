"""HTTP/JSON runtime tying the knowledge base, models and user feedback
into one loop.

Per language the service keeps a knowledge base, a frequency table, a
trigram model and (once enough data arrives) an LSTM classifier. Analysis
is strictly KB-first: a known word never reaches a model. Feedback
mutates the KB synchronously (read-your-writes) and queues the model
update; state flushes to disk on an interval, after a burst of mutations,
and on shutdown, always via atomic snapshot writes.
"""

import dataclasses
import json
import os
import queue
import random
import re
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pydantic
from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware

from spellnorm import corpus as corpus_mod
from spellnorm import lstm as lstm_mod
from spellnorm.kb import KnowledgeBase
from spellnorm.labels import Label
from spellnorm.misspell import augment_words, build_confusion_set, load_patterns
from spellnorm.textcore import tokenize
from spellnorm.trigram import TrigramModel
from spellnorm.util import atomic_write_text, derive_seed

ENV_PREFIX = "SPELLNORM_"


@dataclass
class ServiceConfig:
    data_dir: str = "spellnorm-data"
    flush_interval: float = 120.0
    flush_after_mutations: int = 50
    model_mode: str = "hybrid"  # trigram | lstm | hybrid
    crossover: int = 1000  # hybrid: trigram below, lstm at/above
    scheme: str = "logFreq"
    max_seed_tokens: int = 500
    seed: int = 0
    patterns: str | None = None
    ui_dir: str | None = None

    @classmethod
    def load(cls, path=None, env=None, **overrides) -> "ServiceConfig":
        """Config file, then environment (SPELLNORM_*), then explicit flags."""
        data: dict = {}
        if path is not None:
            with open(path, encoding="utf-8") as handle:
                data.update(json.load(handle))
        env = os.environ if env is None else env
        for f in dataclasses.fields(cls):
            raw = env.get(ENV_PREFIX + f.name.upper())
            if raw is not None:
                if f.type in ("float", float):
                    data[f.name] = float(raw)
                elif f.type in ("int", int):
                    data[f.name] = int(raw)
                else:
                    data[f.name] = raw
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown service config keys: {sorted(extra)}")
        config = cls(**data)
        if config.model_mode not in ("trigram", "lstm", "hybrid"):
            raise ValueError(f"bad model_mode {config.model_mode!r}")
        return config


def _language_id(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.strip().lower()).strip("-")
    if not slug:
        raise ValueError(f"cannot derive a language id from {name!r}")
    return slug


def _single_token(text: str, what: str) -> str:
    tokens = tokenize(text)
    if len(tokens) != 1:
        raise ValueError(f"{what} must normalize to exactly one token, got {tokens!r}")
    return tokens[0]


@dataclass
class LanguageSession:
    language_id: str
    name: str
    directory: Path
    config: ServiceConfig
    kb: KnowledgeBase = field(default_factory=KnowledgeBase)
    table: corpus_mod.FrequencyTable = field(default_factory=corpus_mod.FrequencyTable)
    trigram: TrigramModel = field(default_factory=TrigramModel)
    lstm: lstm_mod.LstmClassifier | None = None
    pool: list = field(default_factory=list)  # (word, Label) calibration pool
    confirmed_misspelled: set = field(default_factory=set)
    trained_words: set = field(default_factory=set)
    stats: dict = field(default_factory=lambda: {"tokens_seen": 0, "predictions": 0, "corrections": 0})
    revision: int = 0
    mutations_since_flush: int = 0
    feedback_count: int = 0

    def __post_init__(self):
        self.lock = threading.RLock()
        self.patterns = load_patterns(self.config.patterns) if self.config.patterns else None

    # -- model selection ------------------------------------------------

    @property
    def n_seed(self) -> int:
        return len(self.trained_words)

    def active_model_name(self) -> str:
        mode = self.config.model_mode
        if mode == "hybrid":
            use_lstm = self.lstm is not None and self.n_seed >= self.config.crossover
            return "lstm" if use_lstm else "trigram"
        return mode

    def _model_verdict(self, token: str) -> Label:
        name = self.active_model_name()
        if name == "lstm" and self.lstm is not None:
            return self.lstm.predict([token])[0]
        if self.trigram.threshold is not None:
            return self.trigram.predict(token)
        # No calibrated model yet: stay quiet rather than flag everything.
        return Label.CORRECT

    # -- operations ------------------------------------------------------

    def analyze(self, text: str) -> dict:
        results = []
        with self.lock:
            tokens = tokenize(text)
            for token in tokens:
                entry = self.kb.lookup(token)
                if entry is not None:
                    verdict, source = entry.status, "kb"
                else:
                    verdict, source = self._model_verdict(token), "model"
                    self.stats["predictions"] += 1
                item = {"text": token, "verdict": verdict.value, "source": source, "candidates": []}
                if verdict is Label.MISSPELLED:
                    item["candidates"] = [
                        {"word": c.word, "distance": c.distance} for c in self.kb.suggest(token)
                    ]
                results.append(item)
            self.stats["tokens_seen"] += len(tokens)
            return {"tokens": results, "revision": self.revision}

    def apply_feedback_kb(self, token: str, label: Label, correction: str | None) -> int:
        """Synchronous KB part of a feedback event; returns the revision."""
        with self.lock:
            if label is Label.CORRECT:
                self.kb.add_correct(token)
                self.confirmed_misspelled.discard(token)
            elif correction is not None:
                self.kb.add_misspelling(token, correction)
            else:
                # No referent to store; remember the mark for the models only.
                self.confirmed_misspelled.add(token)
            self.stats["corrections"] += 1
            self.feedback_count += 1
            self.revision += 1
            self.mutations_since_flush += 1
            return self.revision

    def apply_feedback_models(self, token: str, label: Label, correction: str | None) -> None:
        with self.lock:
            if label is Label.CORRECT:
                self.trigram.update([token])
                self.pool.append((token, Label.CORRECT))
            else:
                self.pool.append((token, Label.MISSPELLED))
                if correction:
                    self.trigram.update([correction])
                    self.pool.append((correction, Label.CORRECT))
            labels = {lab for _, lab in self.pool}
            if len(labels) == 2:
                self.trigram.calibrate_threshold(self.pool)
            if self.lstm is not None:
                alphabet = self.table.alphabet() or tuple(sorted(set(token)))
                lstm_mod.feedback_update(
                    self.lstm,
                    token,
                    label,
                    derive_seed(self.config.seed, "feedback", str(self.feedback_count)),
                    correction=correction,
                    alphabet=alphabet,
                    forbidden=self.kb.correct_words(),
                    patterns=self.patterns,
                )
            self.revision += 1
            self.mutations_since_flush += 1

    def _train_seeds(self, new_seeds: list[str]) -> None:
        """Feed newly selected seed words to both models."""
        if not new_seeds:
            return
        alphabet = self.table.alphabet()
        rng = random.Random(derive_seed(self.config.seed, "upload", str(self.n_seed)))
        for word in new_seeds:
            cset = build_confusion_set(
                word, rng, alphabet=alphabet,
                forbidden=set(new_seeds) | self.trained_words, patterns=self.patterns,
            )
            self.trigram.update(t for t, lab in cset.entries if lab is Label.CORRECT)
            self.pool.extend(cset.entries)
        if {lab for _, lab in self.pool} == {Label.CORRECT, Label.MISSPELLED}:
            self.trigram.calibrate_threshold(self.pool)
        if self.config.model_mode in ("lstm", "hybrid"):
            if self.lstm is None:
                self.lstm = lstm_mod.LstmClassifier(
                    alphabet, init_seed=derive_seed(self.config.seed, "lstm-init")
                )
            training_set = augment_words(
                new_seeds,
                self.table.entries,
                self.config.scheme,
                random.Random(derive_seed(self.config.seed, "upload-aug", str(self.n_seed))),
                alphabet=alphabet,
                forbidden=set(new_seeds) | self.trained_words,
                patterns=self.patterns,
            )
            self.lstm.train(
                training_set,
                rng=np.random.default_rng(
                    derive_seed(self.config.seed, "upload-train", str(self.n_seed))
                ),
            )
        self.trained_words.update(new_seeds)

    def ingest_raw(self, text: str) -> dict:
        with self.lock:
            tokens = tokenize(text)
            self.table.add_tokens(tokens)
            self.kb.set_ranks(self.table.ranks())
            seeds = self.table.top(min(self.config.max_seed_tokens, len(self.table)))
            new_seeds = [w for w in seeds if w not in self.trained_words]
            self._train_seeds(new_seeds)
            self.revision += 1
            self.mutations_since_flush += 1
            return {
                "ok": True,
                "kind": "raw",
                "tokens": len(tokens),
                "types": len(set(tokens)),
                "new_seed_tokens": len(new_seeds),
                "rejected": 0,
                "revision": self.revision,
            }

    def ingest_labelled(self, text: str) -> dict:
        ingested = rejected = 0
        with self.lock:
            for raw in text.splitlines():
                line = raw.strip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                try:
                    if len(fields) not in (2, 3):
                        raise ValueError("expected token<TAB>label[<TAB>correction]")
                    token = _single_token(fields[0], "token")
                    label = Label.parse(fields[1])
                    correction = _single_token(fields[2], "correction") if len(fields) == 3 else None
                    if label is Label.MISSPELLED and correction == token:
                        raise ValueError("correction equals token")
                    self.apply_feedback_kb(token, label, correction)
                    self.apply_feedback_models(token, label, correction)
                    ingested += 1
                except ValueError:
                    rejected += 1
            return {
                "ok": True,
                "kind": "labelled",
                "ingested": ingested,
                "rejected": rejected,
                "revision": self.revision,
            }

    def stats_payload(self) -> dict:
        with self.lock:
            return {
                **self.stats,
                "kb_size": len(self.kb),
                "model": self.active_model_name(),
                "n_seed": self.n_seed,
                "revision": self.revision,
            }

    # -- persistence -------------------------------------------------------

    def flush(self) -> None:
        with self.lock:
            if self.mutations_since_flush == 0:
                return
            self.directory.mkdir(parents=True, exist_ok=True)
            self.kb.save(self.directory / "kb.tsv")
            self.trigram.save(self.directory / "trigram.model")
            if self.lstm is not None:
                self.lstm.save(self.directory / "lstm.npz")
            if len(self.table):
                corpus_mod.write_frequency_tsv(self.directory / "table.freq.tsv", self.table)
            pool_lines = [f"{tok}\t{lab.value}" for tok, lab in self.pool]
            atomic_write_text(self.directory / "pool.tsv", "\n".join(pool_lines) + "\n")
            meta = {
                "language_id": self.language_id,
                "name": self.name,
                "stats": self.stats,
                "revision": self.revision,
                "confirmed_misspelled": sorted(self.confirmed_misspelled),
                "trained_words": sorted(self.trained_words),
                "feedback_count": self.feedback_count,
            }
            atomic_write_text(
                self.directory / "meta.json", json.dumps(meta, ensure_ascii=False, sort_keys=True)
            )
            self.mutations_since_flush = 0

    @classmethod
    def restore(cls, directory: Path, config: ServiceConfig) -> "LanguageSession":
        with open(directory / "meta.json", encoding="utf-8") as handle:
            meta = json.load(handle)
        session = cls(meta["language_id"], meta["name"], directory, config)
        session.stats = meta["stats"]
        session.revision = meta["revision"]
        session.confirmed_misspelled = set(meta["confirmed_misspelled"])
        session.trained_words = set(meta["trained_words"])
        session.feedback_count = meta.get("feedback_count", 0)
        if (directory / "kb.tsv").exists():
            session.kb = KnowledgeBase.load(directory / "kb.tsv")
        if (directory / "trigram.model").exists():
            session.trigram = TrigramModel.load(directory / "trigram.model")
        if (directory / "lstm.npz").exists():
            session.lstm = lstm_mod.LstmClassifier.load(directory / "lstm.npz")
        if (directory / "table.freq.tsv").exists():
            session.table = corpus_mod.read_frequency_tsv(
                directory / "table.freq.tsv", meta["language_id"]
            )
            session.kb.set_ranks(session.table.ranks())
        if (directory / "pool.tsv").exists():
            with open(directory / "pool.tsv", encoding="utf-8") as handle:
                for line in handle:
                    line = line.rstrip("\n")
                    if line:
                        tok, lab = line.split("\t")
                        session.pool.append((tok, Label.parse(lab)))
        return session


class SpellingService:
    """Owns the sessions, the model-update queue and the background flusher."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.sessions: dict[str, LanguageSession] = {}
        self._queue: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._last_flush = time.monotonic()
        self.data_dir.mkdir(parents=True, exist_ok=True)
        for meta_path in sorted(self.data_dir.glob("*/meta.json")):
            session = LanguageSession.restore(meta_path.parent, config)
            self.sessions[session.language_id] = session

    # -- lifecycle -----------------------------------------------------

    def start(self) -> None:
        self._stop.clear()
        worker = threading.Thread(target=self._update_worker, name="spellnorm-updates", daemon=True)
        flusher = threading.Thread(target=self._flush_loop, name="spellnorm-flusher", daemon=True)
        self._threads = [worker, flusher]
        for thread in self._threads:
            thread.start()

    def stop(self) -> None:
        self.drain()
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=5)
        self._threads = []
        self.flush_all(force=True)

    def drain(self) -> None:
        """Block until every queued model update has been applied."""
        self._queue.join()

    def _update_worker(self) -> None:
        while not self._stop.is_set():
            try:
                language_id, token, label, correction = self._queue.get(timeout=0.1)
            except queue.Empty:
                continue
            try:
                session = self.sessions.get(language_id)
                if session is not None:
                    session.apply_feedback_models(token, label, correction)
            finally:
                self._queue.task_done()

    def _flush_loop(self) -> None:
        while not self._stop.wait(timeout=min(1.0, self.config.flush_interval / 4)):
            now = time.monotonic()
            interval_due = now - self._last_flush >= self.config.flush_interval
            for session in list(self.sessions.values()):
                if session.mutations_since_flush >= self.config.flush_after_mutations or (
                    interval_due and session.mutations_since_flush > 0
                ):
                    session.flush()
            if interval_due:
                self._last_flush = now

    def flush_all(self, force: bool = False) -> None:
        for session in list(self.sessions.values()):
            if force or session.mutations_since_flush > 0:
                session.flush()

    # -- API operations --------------------------------------------------

    def create_language(self, name: str) -> dict:
        language_id = _language_id(name)
        if language_id not in self.sessions:
            session = LanguageSession(
                language_id, name.strip(), self.data_dir / language_id, self.config
            )
            session.mutations_since_flush += 1
            self.sessions[language_id] = session
            session.flush()
        return {"language_id": language_id}

    def languages(self) -> list[dict]:
        return [
            {"language_id": s.language_id, "name": s.name}
            for s in sorted(self.sessions.values(), key=lambda s: s.language_id)
        ]

    def session(self, language_id: str) -> LanguageSession:
        try:
            return self.sessions[language_id]
        except KeyError:
            raise LookupError(f"unknown language {language_id!r}") from None

    def analyze(self, language_id: str, text: str) -> dict:
        return self.session(language_id).analyze(text)

    def feedback(self, language_id: str, token: str, label_text: str, correction: str | None) -> dict:
        session = self.session(language_id)
        label = Label.parse(label_text)
        token = _single_token(token, "token")
        if correction is not None:
            correction = _single_token(correction, "correction")
            if correction == token:
                raise ValueError("the correction must differ from the token")
        if label is Label.CORRECT and correction is not None:
            raise ValueError("a correct label does not take a correction")
        revision = session.apply_feedback_kb(token, label, correction)
        self._queue.put((language_id, token, label, correction))
        return {"ok": True, "revision": revision}

    def upload(self, language_id: str, content: bytes, kind: str) -> dict:
        session = self.session(language_id)
        try:
            text = content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValueError(f"upload must be UTF-8 text: {exc}") from None
        if kind == "raw":
            return session.ingest_raw(text)
        if kind == "labelled":
            return session.ingest_labelled(text)
        raise ValueError(f"unknown upload kind {kind!r} (use raw or labelled)")

    def stats(self, language_id: str) -> dict:
        return self.session(language_id).stats_payload()

    def suggestions(self, language_id: str, word: str) -> dict:
        session = self.session(language_id)
        token = _single_token(word, "word")
        with session.lock:
            candidates = session.kb.suggest(token)
            return {
                "word": token,
                "candidates": [{"word": c.word, "distance": c.distance} for c in candidates],
                "revision": session.revision,
            }


class LanguageBody(pydantic.BaseModel):
    name: str


class AnalyzeBody(pydantic.BaseModel):
    text: str


class FeedbackBody(pydantic.BaseModel):
    token: str
    label: str
    correction: str | None = None


def create_app(config: ServiceConfig):
    """FastAPI application wired to a SpellingService."""
    service = SpellingService(config)

    @asynccontextmanager
    async def lifespan(app):
        service.start()
        try:
            yield
        finally:
            service.stop()

    app = FastAPI(title="spellnorm", lifespan=lifespan)
    app.state.service = service
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _wrap(func, *args):
        try:
            return func(*args)
        except LookupError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/languages")
    def post_language(body: LanguageBody):
        return _wrap(service.create_language, body.name)

    @app.get("/languages")
    def get_languages():
        return service.languages()

    @app.post("/sessions/{language_id}/analyze")
    def post_analyze(language_id: str, body: AnalyzeBody):
        return _wrap(service.analyze, language_id, body.text)

    @app.post("/sessions/{language_id}/feedback")
    def post_feedback(language_id: str, body: FeedbackBody):
        return _wrap(service.feedback, language_id, body.token, body.label, body.correction)

    @app.post("/sessions/{language_id}/upload")
    def post_upload(language_id: str, file: UploadFile = File(...), kind: str = Form("raw")):
        content = file.file.read()
        return _wrap(service.upload, language_id, content, kind)

    @app.get("/sessions/{language_id}/stats")
    def get_stats(language_id: str):
        return _wrap(service.stats, language_id)

    @app.get("/sessions/{language_id}/suggestions")
    def get_suggestions(language_id: str, word: str):
        return _wrap(service.suggestions, language_id, word)

    if config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
