from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SEED_CONV_1, SEED_CONV_3, SEED_CONV_25
from langacq.env import EnvConfig, Event, SessionEndedError, Stage, is_ended, new_session, step
from langacq.language import sentence_text, sentence_validity


def test_opening_for_conversation_3(tinka):
    state, opening = new_session(tinka, EnvConfig(seed=SEED_CONV_3))
    assert opening == "soro kina batu"
    assert state.stage == Stage.AWAIT_SECOND
    assert state.recorded_second is None


@pytest.mark.parametrize("seed", range(30))
def test_opening_is_enumerated_and_deterministic(tinka, seed):
    _, a = new_session(tinka, EnvConfig(seed=seed))
    _, b = new_session(tinka, EnvConfig(seed=seed))
    assert a == b
    assert sentence_validity(tinka, a)


def test_invalid_message_gets_confusion(tinka):
    state, opening = new_session(tinka, EnvConfig(seed=SEED_CONV_1))
    assert opening == "banu tira lomo"
    out = step(state, "lomo sora kina")
    assert out.reply == "moko lira bani"
    assert out.event == Event.FEEDBACK_NEGATIVE and not out.valid
    assert state.stage == Stage.AWAIT_SECOND and state.active_conversation == 0


def test_conversation_one_completes(tinka):
    state, _ = new_session(tinka, EnvConfig(seed=SEED_CONV_1))
    out = step(state, "lumo banu kina")
    assert out.reply == "koro lumo tira fanu"
    assert out.event == Event.FEEDBACK_POSITIVE
    assert state.stage == Stage.AWAIT_FOURTH
    out = step(state, "fanu kina riko")
    assert out.event == Event.COMPLETION and out.completed
    assert state.completions == 1
    assert out.reply == "koro " + sentence_text(state.conversation[0])
    assert state.stage == Stage.AWAIT_SECOND


def test_wrong_fourth_keeps_attempt_alive(tinka):
    state, _ = new_session(tinka, EnvConfig(seed=SEED_CONV_1))
    step(state, "lumo banu kina")
    out = step(state, "banu tira lomo")  # valid but not the closing line
    assert out.event == Event.FEEDBACK_POSITIVE
    assert out.reply == "koro lumo tira fanu"
    assert state.stage == Stage.AWAIT_FOURTH
    assert state.recorded_second == ("lumo", "banu", "kina")
    assert step(state, "fanu kina riko").event == Event.COMPLETION


def test_confusion_resets_attempt(tinka):
    state, _ = new_session(tinka, EnvConfig(seed=SEED_CONV_1))
    step(state, "lumo banu kina")
    assert step(state, "nonsense").reply == "moko lira bani"
    assert state.stage == Stage.AWAIT_SECOND and state.recorded_second is None
    # the earlier second sentence no longer counts
    out = step(state, "fanu kina riko")
    assert out.event == Event.FEEDBACK_POSITIVE
    assert out.immediate_recovery
    assert step(state, "fanu kina riko").event == Event.FEEDBACK_POSITIVE


def test_immediate_recovery_only_after_confusion(tinka):
    state, _ = new_session(tinka, EnvConfig(seed=SEED_CONV_1))
    assert not step(state, "lumo banu kina").immediate_recovery
    assert not step(state, "xx").immediate_recovery
    assert not step(state, "yy").immediate_recovery
    assert step(state, "lumo banu kina").immediate_recovery


def test_shared_opening_follows_the_agent(tinka):
    # conversations 1 and 25 both open with "banu tira lomo"
    state, opening = new_session(tinka, EnvConfig(seed=SEED_CONV_25))
    assert opening == "banu tira lomo" and state.active_conversation == 24
    assert step(state, "lumo banu kina").reply == "koro lumo tira fanu"
    assert state.active_conversation == 0
    assert step(state, "fanu kina riko").event == Event.COMPLETION


def test_session_ends_at_t_max(tinka):
    state, _ = new_session(tinka, EnvConfig(seed=1))
    for i in range(99):
        assert step(state, "zz").event == Event.FEEDBACK_NEGATIVE
        assert not is_ended(state)
    last = step(state, "zz")
    assert last.event == Event.SESSION_END and last.reply == "moko lira bani"
    assert is_ended(state)
    with pytest.raises(SessionEndedError):
        step(state, "zz")


def test_session_ends_after_target_completions(tinka):
    state, _ = new_session(tinka, EnvConfig(seed=SEED_CONV_1, target_completions=1))
    assert not is_ended(state)
    step(state, "lumo banu kina")
    out = step(state, "fanu kina riko")
    assert out.event == Event.SESSION_END and out.completed
    assert is_ended(state) and state.completions == 1


def test_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(t_max=0)
    with pytest.raises(ValueError):
        EnvConfig(target_completions=0)


def _surface_ok(spec, reply):
    if reply == spec.feedback.confusion:
        return True
    head, _, rest = reply.partition(" ")
    return head == spec.feedback.positive and sentence_validity(spec, rest) and rest == " ".join(rest.split())


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), data=st.data())
def test_reply_forms_and_determinism(tinka, seed, data):
    pool = sorted(" ".join(s) for s in tinka.sentences) + ["moko lira bani", "koro banu", "", "Banu Tira Lomo"]
    msgs = data.draw(st.lists(st.sampled_from(pool), min_size=1, max_size=40))

    def play():
        state, opening = new_session(tinka, EnvConfig(seed=seed))
        outs = []
        for m in msgs:
            if is_ended(state):
                break
            outs.append(step(state, m))
        return opening, outs, state

    opening, outs, state = play()
    opening2, outs2, _ = play()
    assert (opening, outs) == (opening2, outs2)
    assert sentence_validity(tinka, opening)
    for m, o in zip(msgs, outs):
        assert _surface_ok(tinka, o.reply)
        # confusion iff invalid
        assert (o.reply == tinka.feedback.confusion) == (not sentence_validity(tinka, m))
        assert o.valid == sentence_validity(tinka, m)
    assert state.completions <= state.config.target_completions
    assert (state.recorded_second is not None) == (state.stage == Stage.AWAIT_FOURTH)
