import logging
from typing import List, Optional

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from config import config, setup_logging
from dataset import BASKET, FORMATS, load_transactions
from equalizer import provenance
from miners import parse_minsup, parse_ratio, read_minsup_table, resolve_minsup
from mining_system import MiningSystem, run_stats
from models import Algorithm, MinsupTable
from rules import RuleExplosionError, rule_rows

logger = logging.getLogger(__name__)


# Pydantic models for responses
class MineResponse(BaseModel):
    """Rules in their JSON form plus the run statistics"""

    rules: List[dict]  # Each dict has the rules CSV columns as keys
    stats: dict


class EqualizeResponse(BaseModel):
    """Derived thresholds with their provenance and the verification outcome"""

    provenance: List[dict]
    subset_ok: bool
    extra_rules: int


async def _read_upload(upload: UploadFile, limit: int) -> bytes:
    data = await upload.read(limit + 1)
    if len(data) > limit:
        raise HTTPException(status_code=413, detail=f"upload exceeds {limit} bytes")
    return data


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise HTTPException(status_code=400, detail=f"unknown format {fmt!r}")


def create_app(system: MiningSystem) -> FastAPI:
    """Build the service around one MiningSystem"""
    app = FastAPI(title="Multi-Support Rule Miner", root_path="")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.system = system
    limit = system.config.MAX_UPLOAD_BYTES

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.post("/api/mine", response_model=MineResponse)
    async def mine(
        file: UploadFile = File(...),
        algorithm: Algorithm = Form(...),
        minconf: str = Form(...),
        minsup: Optional[str] = Form(None),
        minsup_table: Optional[str] = Form(None),
        format: str = Form(BASKET),
    ):
        """Mine an uploaded corpus with one of the four algorithms"""
        _check_format(format)
        if (minsup is None) == (minsup_table is None):
            raise HTTPException(
                status_code=400, detail="give exactly one of minsup or minsup_table"
            )
        data = await _read_upload(file, limit)
        try:
            ts = load_transactions(data, format)
            threshold = parse_ratio(minconf)
            if minsup_table is not None:
                lines = minsup_table.splitlines()
                spec = read_minsup_table(lines, ts.dictionary, ts.n)
            elif algorithm.multi_support:
                spec = MinsupTable.uniform(resolve_minsup(parse_minsup(minsup), ts.n))
            else:
                spec = parse_minsup(minsup)
            result = system.run(algorithm, ts, spec, threshold)
            places = system.config.DECIMAL_PLACES
            return MineResponse(
                rules=rule_rows(result.rules, ts.dictionary, places),
                stats=run_stats(result, ts, spec, threshold),
            )
        except (ValueError, KeyError, RuleExplosionError) as e:
            raise HTTPException(status_code=400, detail=str(e))
        except Exception as e:
            logger.exception("mining failed")
            raise HTTPException(status_code=500, detail=str(e))

    @app.post("/api/equalize", response_model=EqualizeResponse)
    async def equalize(
        file: UploadFile = File(...),
        minsup: str = Form(...),
        minconf: str = Form(...),
        format: str = Form(BASKET),
    ):
        """Derive per-item minsups from SAR rules and verify them with SARMSMC"""
        _check_format(format)
        data = await _read_upload(file, limit)
        try:
            ts = load_transactions(data, format)
            report, verification = system.equalize(
                ts, parse_minsup(minsup), parse_ratio(minconf)
            )
            return EqualizeResponse(
                provenance=provenance(report, ts.dictionary),
                subset_ok=verification.subset_ok,
                extra_rules=len(verification.extra_rules),
            )
        except (ValueError, KeyError, RuleExplosionError) as e:
            raise HTTPException(status_code=400, detail=str(e))
        except Exception as e:
            logger.exception("equalization failed")
            raise HTTPException(status_code=500, detail=str(e))

    return app


setup_logging(config.LOG_LEVEL)
app = create_app(MiningSystem(config))
