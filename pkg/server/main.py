from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from dotenv import load_dotenv
import logging
from api import router as api_router
from services.settings import get_settings
import uvicorn

# Load environment variables
load_dotenv()

logging.basicConfig(level=getattr(logging, get_settings().log_level.upper(), logging.INFO))

app = FastAPI(
    title="Social Tic-Tac-Toe Trainer",
    description="TD(lambda) agents trained through self-play, round robin and modified Swiss populations",
    version="1.0.0"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(api_router)

@app.get("/")
async def root():
    return {"message": "Social Tic-Tac-Toe Trainer API", "version": "1.0.0"}

@app.get("/health")
async def health_check():
    return {"status": "healthy", "service": "social-ttt-api"}

if __name__ == "__main__":
    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=8000,
        reload=True
    )
