"""Untrusted rendering service.

Stores encrypted volume containers and executes render requests against
them. The process never sees a secure key: it can run the homomorphic
pipeline but cannot decrypt a single voxel or pixel. Camera and transfer
function parameters arrive in plaintext by design.

Run with: python -m ciphercast.server --port 8443 --data-dir ./volumes
"""

from __future__ import annotations

import argparse
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .encimage import serialize_enc_image
from .render import Camera, RenderRequest, TransferNode, render
from .volume import EncVolume, VolumeFormatError, deserialize_enc_volume

DEFAULT_PIXEL_BUDGET = 65536


@dataclass
class VolumeRecord:
    id: str
    key_fingerprint: str
    encoding_dim: int
    dims: tuple[int, int, int]
    created_at: float
    path: Path

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "key_fingerprint": self.key_fingerprint,
            "encoding_dim": self.encoding_dim,
            "dims": list(self.dims),
            "created_at": self.created_at,
        }


class CameraModel(BaseModel):
    eye: tuple[float, float, float]
    look_at: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    fov: float = 45.0
    resolution: tuple[int, int] = (64, 64)


class TransferNodeModel(BaseModel):
    density: float = Field(ge=0.0, le=1.0)
    color: tuple[float, float, float]


class RenderRequestModel(BaseModel):
    camera: CameraModel
    mode: str
    emphasize_density: float | None = None
    tf_nodes: list[TransferNodeModel] = []
    step_size: float = 0.5
    gamma: int = 6

    def to_request(self) -> RenderRequest:
        cam = Camera(
            eye=self.camera.eye,
            look_at=self.camera.look_at,
            up=self.camera.up,
            vertical_fov=self.camera.fov,
            resolution=self.camera.resolution,
        )
        return RenderRequest(
            camera=cam,
            mode=self.mode,
            emphasize_density=self.emphasize_density,
            tf_nodes=tuple(TransferNode(n.density, n.color) for n in self.tf_nodes),
            step_size=self.step_size,
            gamma=self.gamma,
        )


@dataclass
class _Job:
    status: str = "pending"
    result: bytes | None = None
    error: str | None = None


@dataclass
class VolumeStore:
    data_dir: Path
    records: dict[str, VolumeRecord] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def rescan(self) -> None:
        """Pick up containers left behind by a previous process."""
        for path in sorted(self.data_dir.glob("*.cvol")):
            vid = path.stem
            if vid in self.records:
                continue
            try:
                ev = deserialize_enc_volume(path.read_bytes())
            except VolumeFormatError:
                continue
            self.records[vid] = _record_for(vid, ev, path)

    def add(self, data: bytes) -> VolumeRecord:
        ev = deserialize_enc_volume(data)
        vid = uuid.uuid4().hex
        path = self.data_dir / f"{vid}.cvol"
        path.write_bytes(data)
        record = _record_for(vid, ev, path)
        with self.lock:
            self.records[vid] = record
        return record

    def get(self, vid: str) -> VolumeRecord:
        with self.lock:
            record = self.records.get(vid)
        if record is None:
            raise KeyError(vid)
        return record

    def delete(self, vid: str) -> None:
        with self.lock:
            record = self.records.pop(vid, None)
        if record is not None:
            record.path.unlink(missing_ok=True)

    def list(self) -> list[VolumeRecord]:
        with self.lock:
            return sorted(self.records.values(), key=lambda r: r.created_at)


def _record_for(vid: str, ev: EncVolume, path: Path) -> VolumeRecord:
    return VolumeRecord(
        id=vid,
        key_fingerprint=ev.key_fingerprint.hex(),
        encoding_dim=ev.encoding_dim,
        dims=ev.dims,
        created_at=time.time(),
        path=path,
    )


def create_app(
    data_dir: str | Path,
    pixel_budget: int = DEFAULT_PIXEL_BUDGET,
    workers: int = 1,
) -> FastAPI:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    store = VolumeStore(data_dir=data_dir)
    store.rescan()
    jobs: dict[str, _Job] = {}
    jobs_lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=max(1, workers))

    app = FastAPI(title="ciphercast render server")
    app.state.store = store
    # browser viewers run on a different origin; everything served here is
    # either public metadata or ciphertext, so a permissive policy is fine
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _load_volume(vid: str) -> EncVolume:
        try:
            record = store.get(vid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no volume {vid}")
        return deserialize_enc_volume(record.path.read_bytes())

    def _render_bytes(vid: str, body: RenderRequestModel) -> bytes:
        w, h = body.camera.resolution
        if w * h > pixel_budget:
            raise HTTPException(
                status_code=413,
                detail=f"requested {w * h} pixels, budget is {pixel_budget}",
            )
        vol = _load_volume(vid)
        req = body.to_request()
        try:
            image = render(vol, req, workers=workers)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return serialize_enc_image(image)

    @app.put("/volumes")
    async def upload_volume(request: Request):
        data = await request.body()
        try:
            record = store.add(data)
        except (VolumeFormatError, IndexError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed container: {exc}")
        return {"id": record.id}

    @app.get("/volumes")
    def list_volumes():
        return [record.to_doc() for record in store.list()]

    @app.delete("/volumes/{vid}")
    def delete_volume(vid: str):
        store.delete(vid)
        return {"deleted": vid}

    @app.get("/volumes/{vid}/data")
    def download_volume(vid: str):
        try:
            record = store.get(vid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no volume {vid}")
        return Response(content=record.path.read_bytes(), media_type="application/octet-stream")

    @app.post("/volumes/{vid}/render")
    def render_endpoint(vid: str, body: RenderRequestModel):
        return Response(content=_render_bytes(vid, body), media_type="application/octet-stream")

    @app.post("/volumes/{vid}/render_async")
    def render_async(vid: str, body: RenderRequestModel):
        try:
            store.get(vid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no volume {vid}")
        job_id = uuid.uuid4().hex
        job = _Job()
        with jobs_lock:
            jobs[job_id] = job

        def run() -> None:
            job.status = "running"
            try:
                job.result = _render_bytes(vid, body)
                job.status = "done"
            except HTTPException as exc:
                job.status = "error"
                job.error = str(exc.detail)
            except Exception as exc:  # pragma: no cover - defensive
                job.status = "error"
                job.error = str(exc)

        executor.submit(run)
        return {"job": job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        if job.status == "done":
            return Response(content=job.result, media_type="application/octet-stream")
        return {"status": job.status, "error": job.error}

    return app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="ciphercast render server")
    parser.add_argument("--host", default=os.environ.get("CIPHERCAST_HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("CIPHERCAST_PORT", "8443")))
    parser.add_argument(
        "--data-dir", default=os.environ.get("CIPHERCAST_DATA_DIR", "./ciphercast-volumes")
    )
    parser.add_argument(
        "--pixel-budget",
        type=int,
        default=int(os.environ.get("CIPHERCAST_PIXEL_BUDGET", str(DEFAULT_PIXEL_BUDGET))),
    )
    parser.add_argument(
        "--workers", type=int, default=int(os.environ.get("CIPHERCAST_WORKERS", "1"))
    )
    args = parser.parse_args(argv)

    import uvicorn

    app = create_app(args.data_dir, pixel_budget=args.pixel_budget, workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
