import pytest

from services.tictactoe import (
    DRAW,
    KEY_SPACE,
    ONGOING,
    SYMMETRIES,
    TO_MOVE_OFFSET,
    GameState,
    IllegalMoveError,
    InvalidStateError,
    Mark,
    MinimaxOracle,
    TerminalStateError,
    apply_move,
    decode,
    default_oracle,
    encode,
    iter_playout,
    legal_actions,
    outcome,
    reachable_states,
    reward,
    transform,
    win_for,
)


@pytest.fixture(scope="module")
def oracle():
    return default_oracle()


@pytest.fixture(scope="module")
def cross_states():
    return reachable_states((Mark.CROSS,))


def test_empty_board_key_and_moves():
    state = GameState.empty()
    assert encode(state) == 0
    assert legal_actions(state) == list(range(9))
    assert outcome(state) == ONGOING
    assert encode(GameState.empty(Mark.NOUGHT)) == TO_MOVE_OFFSET


def test_move_sequence_ends_on_anti_diagonal():
    states = list(iter_playout([0, 1, 2, 3, 4, 5, 6]))
    final = states[-1]
    assert final.to_string() == "XOXOXOX.."
    assert outcome(final) == win_for(Mark.CROSS)
    assert all(outcome(s) == ONGOING for s in states[:-1])
    with pytest.raises(TerminalStateError):
        apply_move(final, 7)
    with pytest.raises(TerminalStateError):
        legal_actions(final)


def test_apply_rejects_occupied_and_off_board():
    state = apply_move(GameState.empty(), 4)
    assert state.to_move is Mark.NOUGHT
    with pytest.raises(IllegalMoveError):
        apply_move(state, 4)
    with pytest.raises(IllegalMoveError):
        apply_move(state, 9)
    with pytest.raises(IllegalMoveError):
        apply_move(state, -1)


def test_apply_does_not_mutate():
    state = GameState.from_string("X...O....", Mark.CROSS)
    apply_move(state, 8)
    assert state.to_string() == "X...O...."


def test_full_board_draw():
    state = GameState.from_string("XOXXOOOXX", Mark.NOUGHT)
    assert outcome(state) == DRAW
    assert reward(DRAW, Mark.CROSS) == 0.0
    with pytest.raises(TerminalStateError):
        legal_actions(state)


def test_rewards_are_zero_sum():
    result = win_for(Mark.NOUGHT)
    assert reward(result, Mark.NOUGHT) == 1.0
    assert reward(result, Mark.CROSS) == -1.0
    assert reward(ONGOING, Mark.CROSS) == 0.0


@pytest.mark.parametrize(
    "board,to_move",
    [
        ("XXX......", Mark.NOUGHT),  # three crosses, no noughts
        ("XX.O.....", Mark.CROSS),  # cross ahead but cross to move
        ("XXXOOO...", Mark.CROSS),  # both sides hold a line
        ("XXXOO....", Mark.CROSS),  # winner to move
        ("XX?......", Mark.CROSS),
        ("XX.......", Mark.NOUGHT),
    ],
)
def test_invalid_boards_rejected(board, to_move):
    with pytest.raises(InvalidStateError):
        GameState.from_string(board, to_move)


def test_decode_rejects_out_of_range_and_unreachable():
    with pytest.raises(InvalidStateError):
        decode(-1)
    with pytest.raises(InvalidStateError):
        decode(KEY_SPACE)
    # three crosses and nothing else
    with pytest.raises(InvalidStateError):
        decode(1 + 3 + 9)


def test_reachable_state_counts(cross_states):
    assert len(cross_states) == 5478
    assert len(reachable_states()) == 10956
    assert sum(1 for s in cross_states if not outcome(s).is_terminal) == 4520


def test_encode_decode_bijection_on_reachable(cross_states):
    keys = [encode(s) for s in cross_states]
    assert len(set(keys)) == len(keys)
    assert all(0 <= k < KEY_SPACE for k in keys)
    for state in cross_states[::97]:
        assert decode(encode(state)) == state


def test_oracle_covers_both_starters(oracle):
    assert len(oracle) == 2 * 4520


def test_empty_board_is_a_draw_with_every_move_best(oracle):
    value, best = oracle.minimax(GameState.empty())
    assert value == 0
    assert best == frozenset(range(9))


def test_immediate_win_is_found(oracle):
    state = GameState.from_string("XX.OO....", Mark.CROSS)
    value, best = oracle.minimax(state)
    assert value == 1
    assert 2 in best
    assert oracle.action_values(state)[2] == 1


def test_forced_block(oracle):
    # Nought must take cell 2 or lose at once
    state = GameState.from_string("XX..O....", Mark.NOUGHT)
    values = oracle.action_values(state)
    assert values[2] == 0
    assert all(v == -1 for a, v in values.items() if a != 2)


def test_oracle_rejects_terminal(oracle):
    with pytest.raises(TerminalStateError):
        oracle.evaluate(GameState.from_string("XXXOO....", Mark.NOUGHT))


def test_oracle_values_symmetric(oracle, cross_states):
    for state in cross_states:
        if outcome(state).is_terminal:
            continue
        value, best = oracle.minimax(state)
        for perm in SYMMETRIES:
            moved = transform(state, perm)
            moved_value, moved_best = oracle.minimax(moved)
            assert moved_value == value
            assert moved_best == frozenset(perm.index(a) for a in best)


def test_lazy_oracle_matches_precomputed(oracle):
    lazy = MinimaxOracle(precompute=False)
    state = GameState.from_string("X...O..X.", Mark.NOUGHT)
    assert lazy.minimax(state) == oracle.minimax(state)
    assert len(lazy) < len(oracle)


def test_oracle_never_loses_from_start(oracle):
    for state in (GameState.empty(Mark.CROSS), GameState.empty(Mark.NOUGHT)):
        assert oracle.evaluate(state).value == 0
