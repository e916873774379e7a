"""HTTP facade: datasets, training jobs, interpolation media, game sessions.

Handlers are stateless over an on-disk store (datasets, model checkpoints,
media blobs) plus in-memory sessions with JSON snapshots; a session found on
disk after a restart is rebuilt by replaying its action log. Training runs on
a small background worker pool; progress is exposed both in the job record
and as a held-open line-delimited JSON stream.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse, StreamingResponse

from . import dataset as ds_mod
from . import media as media_mod
from . import shadow as shadow_mod
from . import trainer as trainer_mod
from .vae import init_model, load_checkpoint, save_checkpoint

GIF_CONTENT_TYPE = "image/gif"
PGM_CONTENT_TYPE = "image/x-portable-graymap"


class ApiError(Exception):
    def __init__(self, status: int, reason: str, detail: str = ""):
        super().__init__(detail or reason)
        self.status = status
        self.reason = reason
        self.detail = detail or reason


@dataclass
class JobRecord:
    id: str
    kind: str = "train"
    state: str = "queued"   # queued -> running -> done | failed | cancelled
    events: list = field(default_factory=list)
    error: Optional[str] = None
    result: dict = field(default_factory=dict)
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat())
    cancel_event: threading.Event = field(default_factory=threading.Event, repr=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id, "kind": self.kind, "state": self.state,
            "events": list(self.events), "error": self.error,
            "result": dict(self.result), "created_at": self.created_at,
        }


class JobManager:
    _TERMINAL = ("done", "failed", "cancelled")

    def __init__(self, max_workers: int = 2):
        self.jobs: dict[str, JobRecord] = {}
        self.cond = threading.Condition()
        self.workers = threading.Semaphore(max_workers)

    def create(self) -> JobRecord:
        job = JobRecord(id=uuid.uuid4().hex[:12])
        with self.cond:
            self.jobs[job.id] = job
        return job

    def get(self, job_id: str) -> JobRecord:
        job = self.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "unknown_job", f"no job {job_id}")
        return job

    def start(self, job: JobRecord, work) -> None:
        def runner():
            with self.workers:
                with self.cond:
                    if job.cancel_event.is_set():
                        job.state = "cancelled"
                        self.cond.notify_all()
                        return
                    job.state = "running"
                    self.cond.notify_all()
                try:
                    result = work(job)
                except trainer_mod.TrainingCancelled:
                    self._finish(job, "cancelled")
                except Exception as exc:  # surfaced via the job record
                    job.error = str(exc)
                    self._finish(job, "failed")
                else:
                    job.result = result
                    self._finish(job, "done")

        threading.Thread(target=runner, daemon=True).start()

    def _finish(self, job: JobRecord, state: str) -> None:
        with self.cond:
            job.state = state
            self.cond.notify_all()

    def add_event(self, job: JobRecord, event: dict) -> None:
        with self.cond:
            job.events.append(event)
            self.cond.notify_all()

    def cancel(self, job: JobRecord) -> None:
        with self.cond:
            if job.state in self._TERMINAL:
                raise ApiError(409, "job_finished",
                               f"job already {job.state}")
            job.cancel_event.set()
            if job.state == "queued":
                job.state = "cancelled"
            self.cond.notify_all()

    def stream(self, job: JobRecord):
        cursor = 0
        while True:
            with self.cond:
                while cursor >= len(job.events) and job.state not in self._TERMINAL:
                    self.cond.wait(timeout=0.5)
                chunk = job.events[cursor:]
                cursor += len(chunk)
                finished = job.state in self._TERMINAL
            for event in chunk:
                yield json.dumps(event) + "\n"
            if finished and cursor >= len(job.events):
                return


class Store:
    def __init__(self, root):
        self.root = Path(root)
        for sub in ("datasets", "models", "media", "sessions"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # datasets
    def save_dataset(self, dataset) -> str:
        return ds_mod.save_dataset(dataset, self.root / "datasets" / dataset.dataset_id)

    def load_dataset(self, dataset_id: str):
        path = self.root / "datasets" / dataset_id
        if not path.exists():
            raise ApiError(404, "unknown_dataset", f"no dataset {dataset_id}")
        return ds_mod.load_dataset(path)

    # models
    def save_model(self, model) -> str:
        blob = save_checkpoint(model)
        model_id = hashlib.sha256(blob).hexdigest()[:16]
        (self.root / "models" / f"{model_id}.lvae").write_bytes(blob)
        return model_id

    def load_model(self, model_id: str):
        path = self.root / "models" / f"{model_id}.lvae"
        if not path.exists():
            raise ApiError(404, "unknown_model", f"no model {model_id}")
        return load_checkpoint(path.read_bytes())

    # media
    def save_media(self, blob: bytes, content_type: str, meta: dict) -> str:
        media_id = hashlib.sha256(blob).hexdigest()[:12]
        (self.root / "media" / f"{media_id}.bin").write_bytes(blob)
        meta = dict(meta, content_type=content_type)
        (self.root / "media" / f"{media_id}.json").write_text(json.dumps(meta))
        return media_id

    def load_media(self, media_id: str) -> tuple[bytes, str]:
        blob_path = self.root / "media" / f"{media_id}.bin"
        meta_path = self.root / "media" / f"{media_id}.json"
        if not blob_path.exists():
            raise ApiError(404, "unknown_media", f"no media {media_id}")
        meta = json.loads(meta_path.read_text())
        return blob_path.read_bytes(), meta["content_type"]

    # sessions
    def snapshot_session(self, session_id: str, session) -> None:
        payload = {"level": session.level.to_dict(), "seed": session.seed,
                   "log": session.log}
        (self.root / "sessions" / f"{session_id}.json").write_text(json.dumps(payload))

    def restore_session(self, session_id: str):
        path = self.root / "sessions" / f"{session_id}.json"
        if not path.exists():
            return None
        raw = json.loads(path.read_text())
        level = shadow_mod.Level.from_dict(raw["level"])
        return shadow_mod.replay(level, raw["seed"], raw["log"])


def _parse_strokes_payload(raw: dict):
    try:
        a = [ds_mod.StrokeSet.from_dict(s) for s in raw["digit_a"]]
        b = [ds_mod.StrokeSet.from_dict(s) for s in raw["digit_b"]]
        n = int(raw["num_images_per_digit"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ApiError(422, "bad_strokes_payload", str(exc))
    seed = int(raw.get("seed", 0))
    return a, b, n, seed


def create_app(store_dir, max_workers: int = 2, ui_dir=None) -> FastAPI:
    app = FastAPI(title="latentcave")
    store = Store(store_dir)
    jobs = JobManager(max_workers=max_workers)
    sessions: dict[str, shadow_mod.GameSession] = {}
    session_locks: dict[str, threading.Lock] = {}
    state_lock = threading.Lock()
    training_models: set[str] = set()

    @app.exception_handler(ApiError)
    async def on_api_error(_, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"reason": exc.reason, "detail": exc.detail})

    # --- datasets -----------------------------------------------------------

    @app.post("/datasets")
    def create_dataset(payload: dict):
        try:
            if "strokes" in payload:
                a, b, n, seed = _parse_strokes_payload(payload["strokes"])
                dataset = ds_mod.build_drawn_dataset(a, b, n, seed=seed)
            elif "idx" in payload:
                images = base64.b64decode(payload["idx"]["images_b64"])
                labels_b64 = payload["idx"].get("labels_b64")
                labels = base64.b64decode(labels_b64) if labels_b64 else None
                dataset = ds_mod.parse_idx(images, labels,
                                           seed=int(payload["idx"].get("seed", 0)))
            else:
                raise ApiError(422, "bad_payload",
                               "expected a 'strokes' or 'idx' payload")
        except (ds_mod.IdxParseError, ds_mod.DatasetConfigError,
                ds_mod.EmptyDrawingError) as exc:
            reason = getattr(exc, "reason", exc.__class__.__name__)
            raise ApiError(422, str(reason), str(exc))
        except (KeyError, ValueError) as exc:
            raise ApiError(422, "bad_payload", str(exc))
        store.save_dataset(dataset)
        return {
            "dataset_id": dataset.dataset_id,
            "size": len(dataset),
            "train_size": int(dataset.train_idx.size),
            "test_size": int(dataset.test_idx.size),
            "warning": dataset.warning,
        }

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        dataset = store.load_dataset(dataset_id)
        return {
            "dataset_id": dataset.dataset_id,
            "provenance": dataset.provenance,
            "size": len(dataset),
            "train_size": int(dataset.train_idx.size),
            "test_size": int(dataset.test_idx.size),
            "warning": dataset.warning,
        }

    # --- training jobs --------------------------------------------------------

    @app.post("/train")
    def start_training(payload: dict):
        dataset_id = payload.get("dataset_id")
        if not dataset_id:
            raise ApiError(422, "bad_payload", "dataset_id is required")
        dataset = store.load_dataset(dataset_id)
        try:
            cfg = trainer_mod.TrainConfig.from_dict(payload.get("config", {}))
        except trainer_mod.ConfigurationError as exc:
            raise ApiError(422, "bad_config", str(exc))
        base_model_id = payload.get("base_model_id")
        if base_model_id:
            base_model = store.load_model(base_model_id)
            with state_lock:
                if base_model_id in training_models:
                    raise ApiError(409, "model_busy",
                                   f"model {base_model_id} already has a running job")
                training_models.add(base_model_id)
        else:
            base_model = None

        job = jobs.create()

        def work(record: JobRecord):
            try:
                model = base_model if base_model is not None else init_model(
                    hidden_dim=cfg.hidden_dim, latent_dim=cfg.latent_dim, seed=cfg.seed)
                report = trainer_mod.train(
                    model, dataset, cfg,
                    progress=lambda e: jobs.add_event(record, e.to_event()),
                    cancel=record.cancel_event.is_set,
                )
                model_id = store.save_model(model)
                return {"model_id": model_id, "epochs": len(report.epochs),
                        "wall_time_s": report.wall_time_s}
            finally:
                if base_model_id:
                    with state_lock:
                        training_models.discard(base_model_id)

        jobs.start(job, work)
        return {"job_id": job.id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return jobs.get(job_id).to_dict()

    @app.get("/jobs/{job_id}/events")
    def stream_job_events(job_id: str):
        job = jobs.get(job_id)
        return StreamingResponse(jobs.stream(job), media_type="application/x-ndjson")

    @app.delete("/jobs/{job_id}")
    def cancel_job(job_id: str):
        job = jobs.get(job_id)
        jobs.cancel(job)
        return {"id": job.id, "state": job.state}

    # --- interpolation media ------------------------------------------------------

    def _endpoint_from(raw) -> object:
        if isinstance(raw, dict) and "strokes" in raw:
            return ds_mod.rasterize(ds_mod.StrokeSet.from_dict(raw))
        if isinstance(raw, dict) and "image" in raw:
            return np.asarray(raw["image"], dtype=np.float64)
        if isinstance(raw, dict) and "latent" in raw:
            from .vae import LatentCode
            mu = np.asarray(raw["latent"], dtype=np.float64)
            return LatentCode(mu=mu, logvar=np.zeros_like(mu))
        if isinstance(raw, dict) and "dataset_id" in raw:
            dataset = store.load_dataset(raw["dataset_id"])
            index = int(raw.get("index", 0))
            if not (0 <= index < len(dataset)):
                raise ApiError(422, "bad_endpoint", f"index {index} out of range")
            return dataset.images[index]
        raise ApiError(422, "bad_endpoint",
                       "endpoint needs strokes, image, latent, or dataset_id")

    @app.post("/models/{model_id}/interpolate")
    def interpolate_model(model_id: str, payload: dict):
        model = store.load_model(model_id)
        try:
            spec = media_mod.InterpolationSpec(
                endpoint_a=_endpoint_from(payload.get("endpoint_a")),
                endpoint_b=_endpoint_from(payload.get("endpoint_b")),
                num_images=int(payload.get("num_images", 10)),
                show_gif_only=bool(payload.get("show_gif_only", True)),
                frame_delay_cs=int(payload.get("frame_delay_cs",
                                               media_mod.DEFAULT_DELAY_CS)),
            )
            seq = media_mod.interpolate(model, spec)
        except (media_mod.MediaSpecError, ds_mod.EmptyDrawingError,
                ds_mod.DatasetConfigError) as exc:
            raise ApiError(422, "bad_interpolation", str(exc))
        gif = media_mod.encode_gif(seq, delay_cs=spec.frame_delay_cs)
        media_id = store.save_media(gif, GIF_CONTENT_TYPE,
                                    {"frames": len(seq), "model_id": model_id})
        out = {"media_id": media_id, "frames": len(seq)}
        if not spec.show_gif_only:
            out["frame_media_ids"] = [
                store.save_media(media_mod.write_pgm(frame), PGM_CONTENT_TYPE,
                                 {"frame": k, "model_id": model_id})
                for k, frame in enumerate(seq.frames)
            ]
        return out

    @app.get("/media/{media_id}")
    def get_media(media_id: str):
        blob, content_type = store.load_media(media_id)
        return Response(content=blob, media_type=content_type)

    # --- the game -------------------------------------------------------------------

    @app.get("/levels")
    def list_levels():
        return [
            {"name": lvl.name, "variant": lvl.variant, "cube_budget": lvl.cube_budget,
             "targets": [list(t.rows) for t in lvl.targets]}
            for lvl in shadow_mod.shipped_levels().values()
        ]

    def _level_from(raw) -> shadow_mod.Level:
        if isinstance(raw, str):
            levels = shadow_mod.shipped_levels()
            if raw not in levels:
                raise ApiError(404, "unknown_level", f"no level {raw!r}")
            return levels[raw]
        if isinstance(raw, dict):
            try:
                return shadow_mod.Level.from_dict(raw)
            except shadow_mod.LevelFormatError as exc:
                raise ApiError(422, "bad_level", str(exc))
        raise ApiError(422, "bad_level", "level must be a name or an inline object")

    def _session(session_id: str) -> shadow_mod.GameSession:
        found = sessions.get(session_id)
        if found is None:
            found = store.restore_session(session_id)
            if found is None:
                raise ApiError(404, "unknown_session", f"no session {session_id}")
            with state_lock:
                sessions[session_id] = found
                session_locks.setdefault(session_id, threading.Lock())
        return found

    def _session_payload(session_id, session, result=None) -> dict:
        payload = {"session_id": session_id, "state": session.to_dict(),
                   "log": list(session.log)}
        if result is not None:
            payload["result"] = result
        return payload

    @app.post("/game/sessions")
    def create_session(payload: dict):
        level = _level_from(payload.get("level"))
        seed = int(payload.get("seed", 0))
        session = shadow_mod.new_session(level, seed)
        session_id = uuid.uuid4().hex[:12]
        with state_lock:
            sessions[session_id] = session
            session_locks[session_id] = threading.Lock()
        store.snapshot_session(session_id, session)
        return _session_payload(session_id, session)

    @app.get("/game/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_payload(session_id, _session(session_id))

    @app.post("/game/sessions/{session_id}/actions")
    def act(session_id: str, action: dict):
        session = _session(session_id)
        lock = session_locks[session_id]
        with lock:
            try:
                result = shadow_mod.apply_action(session, action)
            except shadow_mod.ModeError as exc:
                raise ApiError(409, "wrong_mode", str(exc))
            except shadow_mod.NoCubeError as exc:
                raise ApiError(422, "no_cube", str(exc))
            except (shadow_mod.GameActionError, KeyError, TypeError, ValueError) as exc:
                raise ApiError(422, "bad_action", str(exc))
            store.snapshot_session(session_id, session)
        if isinstance(result, shadow_mod.MoveResult):
            wire = {"ok": result.ok, "reason": result.reason}
        elif isinstance(result, shadow_mod.ShadowMask):
            wire = {"shadow": list(result.rows)}
        elif isinstance(result, bool):
            wire = {"matched": result}
        else:
            wire = None
        return _session_payload(session_id, session, result=wire)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # mounted last so the API routes above keep precedence
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
