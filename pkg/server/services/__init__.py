# Services module
from .tictactoe import GameState, Mark, MinimaxOracle
from .td_learning import AgentIdentity, Hyperparameters, QTable
from .players import OraclePlayer, RandomPlayer, TDAgent
from .game_controller import PopulationConfig, Regime, train_population
from .evaluation import run_board_test, run_league

__all__ = [
    'GameState', 'Mark', 'MinimaxOracle',
    'AgentIdentity', 'Hyperparameters', 'QTable',
    'OraclePlayer', 'RandomPlayer', 'TDAgent',
    'PopulationConfig', 'Regime', 'train_population',
    'run_board_test', 'run_league',
]
