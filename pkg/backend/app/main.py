#!/usr/bin/env python3
"""
StableCall API
FastAPI backend for stable densities, call expectations, Stein audits and bounds
"""

from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded
from slowapi.util import get_remote_address

from app.config import ALLOWED_ORIGINS, GRID_POINTS
from app.routes.bounds import router as bounds_router
from app.routes.stable import router as stable_router
from app.routes.stein import router as stein_router
from app.services.stable_dist import build_density_grid

# Rate limiter
limiter = Limiter(key_func=get_remote_address)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Lifespan event handler: warm the density cache"""
    # Startup
    print("🚀 Starting StableCall API...")
    print("📈 Building S_1.5(1, 0) density grid...")
    grid = build_density_grid(1.5, 0.0)
    print(f"✓ Density grid ready ({GRID_POINTS} points, mass {grid.mass:.10f})")

    yield

    # Shutdown
    print("🛑 Shutting down StableCall API...")

app = FastAPI(
    title="StableCall API",
    description="Stable approximation of call expectations: densities, bounds and Stein audits",
    version="1.0.0",
    lifespan=lifespan
)

# Add rate limiter to app
app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)

app.add_middleware(
    CORSMiddleware,
    allow_origins=ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
)

# Include routers
app.include_router(stable_router, prefix="/api")
app.include_router(bounds_router, prefix="/api")
app.include_router(stein_router, prefix="/api")


@app.get("/api/health/")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "cached_grids": build_density_grid.cache_info().currsize,
    }
