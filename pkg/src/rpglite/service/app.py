"""HTTP front end for the game service.

Thin wiring only: every rule lives in ``core.Service``.  The app adds
bearer-token authentication, one interaction-log row per request
(success, domain error, and crash alike), and JSON error envelopes of
the form ``{"error": {"code", "message"}}``.
"""

from __future__ import annotations

import hashlib
import json
import time
from importlib import resources
from pathlib import Path

from fastapi import Body, Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from .. import __version__
from ..config import Config, load_config_file, season1
from ..errors import RpgliteError
from ..medals import MedalBook
from .core import Account, ApiError, Service
from .storage import INTERACTIONS_FILE, AppendLog

INTERACTION_SCHEMA = "rpglite.interaction/1"


def _default_medal_book() -> MedalBook:
    raw = resources.files("rpglite.data").joinpath("medals.json").read_text("utf-8")
    return MedalBook.from_json_dict(json.loads(raw))


class InteractionRecorder:
    """Append-only per-request audit stream.

    A failure to write never fails the request; it only bumps the
    ``failures`` counter surfaced by the health endpoint.
    """

    def __init__(self, path=None):
        self.sink = AppendLog(path) if path is not None else None
        self.seq = self.sink.count_rows() if self.sink is not None else 0
        self.logged = 0
        self.failures = 0

    def record(
        self,
        at: float,
        username: str | None,
        endpoint: str,
        params_digest: str,
        result: int,
        outcome: str,
    ) -> None:
        self.seq += 1
        row = {
            "schema": INTERACTION_SCHEMA,
            "at": at,
            "seq": self.seq,
            "username": username,
            "endpoint": endpoint,
            "params_digest": params_digest,
            "result": result,
            "outcome": outcome,
        }
        try:
            if self.sink is not None:
                self.sink.append(row)
            self.logged += 1
        except Exception:
            self.failures += 1


def create_app(
    config_path: str | None = None,
    data_dir: str | None = None,
    seed: int | None = None,
    static_dir: str | None = None,
    admin_token: str | None = None,
    medals_path: str | None = None,
    config: Config | None = None,
    clock=time.time,
) -> FastAPI:
    """Build the service app.

    ``config_path`` points at the active season's config file (the
    packaged season 1 is the default).  ``data_dir`` enables the event
    log, snapshots, interaction log, and on-disk solver artifacts.
    ``seed`` fixes all generated randomness for reproducible tests;
    leave it unset in production for entropy-backed values.
    """
    if config is None:
        config = load_config_file(config_path) if config_path else season1()
    if medals_path is not None:
        book = MedalBook.from_json_dict(json.loads(Path(medals_path).read_text("utf-8")))
    else:
        book = _default_medal_book()
    artifact_root = Path(data_dir) / "artifacts" if data_dir is not None else None
    service = Service(
        config,
        data_dir=data_dir,
        seed=seed,
        medal_book=book,
        artifact_root=artifact_root,
        clock=clock,
    )
    recorder = InteractionRecorder(
        Path(data_dir) / INTERACTIONS_FILE if data_dir is not None else None
    )

    async def capture_params(request: Request) -> None:
        body = await request.body()
        prefix = f"{request.method} {request.url.path}?{request.url.query} "
        request.state.params_digest = hashlib.sha1(
            prefix.encode("utf-8") + body
        ).hexdigest()[:12]

    app = FastAPI(
        title="rpglite service",
        version=__version__,
        docs_url=None,
        redoc_url=None,
        openapi_url=None,
        dependencies=[Depends(capture_params)],
    )
    app.state.service = service
    app.state.interactions = recorder

    def require_user(
        request: Request, authorization: str | None = Header(default=None)
    ) -> Account:
        if not authorization or not authorization.lower().startswith("bearer "):
            raise ApiError(401, "Unauthorized", "bearer token required")
        account = service.account_for_token(authorization[7:].strip())
        if account is None:
            raise ApiError(401, "Unauthorized", "unknown token")
        request.state.username = account.username
        return account

    @app.middleware("http")
    async def interaction_log(request: Request, call_next):
        at = clock()

        def finish(status: int, fallback: str) -> None:
            endpoint = request.url.path
            route = request.scope.get("route")
            if route is not None:
                endpoint = route.path
            digest = getattr(request.state, "params_digest", None)
            if digest is None:
                prefix = f"{request.method} {request.url.path}?{request.url.query} "
                digest = hashlib.sha1(prefix.encode("utf-8")).hexdigest()[:12]
            outcome = getattr(request.state, "outcome", None)
            if outcome is None:
                outcome = "ok" if status < 400 else fallback
            recorder.record(
                at,
                getattr(request.state, "username", None),
                endpoint,
                digest,
                status,
                outcome,
            )

        try:
            response = await call_next(request)
        except Exception:
            finish(500, "InternalError")
            raise
        finish(response.status_code, "HTTPError")
        return response

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        request.state.outcome = exc.code
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        request.state.outcome = "ValidationError"
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "ValidationError", "message": "malformed request"}},
        )

    @app.exception_handler(RpgliteError)
    async def domain_error_handler(request: Request, exc: RpgliteError):
        request.state.outcome = "Internal"
        return JSONResponse(
            status_code=500,
            content={"error": {"code": "Internal", "message": str(exc)}},
        )

    @app.exception_handler(StarletteHTTPException)
    async def http_error_handler(request: Request, exc: StarletteHTTPException):
        request.state.outcome = "HTTPError"
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": {"code": "HTTPError", "message": str(exc.detail)}},
        )

    @app.post("/v1/register", status_code=201)
    def register(request: Request, payload: dict = Body(...)):
        out = service.register(
            payload.get("username"),
            payload.get("password"),
            bool(payload.get("consent_research", False)),
            bool(payload.get("consent_terms", False)),
        )
        request.state.username = out["username"]
        return out

    @app.post("/v1/login")
    def login(request: Request, payload: dict = Body(...)):
        out = service.login(payload.get("username"), payload.get("password"))
        request.state.username = out["username"]
        return out

    @app.get("/v1/home")
    def home(account: Account = Depends(require_user)):
        return service.get_home(account.username)

    @app.post("/v1/queue")
    def queue(payload: dict = Body(...), account: Account = Depends(require_user)):
        return service.queue_for_match(account.username, payload.get("slot"))

    @app.post("/v1/challenge")
    def challenge(payload: dict = Body(...), account: Account = Depends(require_user)):
        return service.challenge(
            account.username, str(payload.get("username") or ""), payload.get("slot")
        )

    @app.post("/v1/games/bot", status_code=201)
    def bot_game(payload: dict = Body(...), account: Account = Depends(require_user)):
        return service.create_bot_game(
            account.username,
            payload.get("slot"),
            payload.get("bot"),
            bool(payload.get("coach", False)),
        )

    @app.get("/v1/games/{game_id}")
    def get_game(game_id: str, account: Account = Depends(require_user)):
        return service.get_game(account.username, game_id)

    @app.post("/v1/games/{game_id}/pair")
    def select_pair(
        game_id: str, payload: dict = Body(...), account: Account = Depends(require_user)
    ):
        return service.select_pair(
            account.username, game_id, payload.get("characters") or []
        )

    @app.post("/v1/games/{game_id}/moves")
    def submit_move(
        game_id: str, payload: dict = Body(...), account: Account = Depends(require_user)
    ):
        return service.submit_move(
            account.username, game_id, payload.get("seq"), payload.get("move") or {}
        )

    @app.post("/v1/games/{game_id}/forfeit")
    def forfeit(game_id: str, account: Account = Depends(require_user)):
        return service.forfeit(account.username, game_id)

    @app.get("/v1/games/{game_id}/hint")
    def hint(game_id: str, account: Account = Depends(require_user)):
        return service.hint(account.username, game_id)

    @app.get("/v1/games/{game_id}/record")
    def record(game_id: str, account: Account = Depends(require_user)):
        return service.get_record(account.username, game_id)

    @app.get("/v1/leaderboard")
    def leaderboard():
        return service.leaderboard()

    @app.get("/v1/profile/{username}")
    def profile(username: str):
        return service.profile(username)

    @app.get("/v1/config")
    def config_info():
        return service.get_config_info()

    @app.post("/v1/admin/season")
    def admin_season(
        payload: dict = Body(...),
        x_admin_token: str | None = Header(default=None),
    ):
        if admin_token is None or x_admin_token != admin_token:
            raise ApiError(403, "AdminForbidden", "season changes need the admin token")
        return service.change_season(payload.get("config") or {})

    @app.get("/v1/health")
    def health():
        stats = service.stats()
        stats.update(
            {
                "status": "ok",
                "version": __version__,
                "interactions_logged": recorder.logged,
                "interaction_log_failures": recorder.failures,
            }
        )
        return stats

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
