from __future__ import annotations

from optimind.gateway import (
    RecordingGateway,
    SamplingParams,
    ScriptedGateway,
    TransportError,
)
from optimind.hints import HintEntry, HintLibrary
from optimind.model import AnswerStatus, ProblemInstance
from optimind.orchestrator import InstanceTrace, read_traces, run_instance, write_traces

INSTANCE = ProblemInstance(
    id="fix-1",
    question="Instance fix-1: ship goods between depots at minimum cost.",
    ground_truths=(160.0,),
)

CLASS_REPLY = "['Minimum Cost Flow Problem']"


def tagged(value: float, note: str = "solution") -> str:
    return f"{note}\n```python\nprint('__OPTIMIND_OBJ__={value!r}')\n```\n"


CRASH = "attempt\n```python\nraise NameError('model')\n```\n"
NO_CODE = "The previous code is correct; no new code block needed."


class FailingGateway:
    """Raises for the first ``fail_calls`` requests, then delegates."""

    def __init__(self, inner, fail_calls=1):
        self.inner = inner
        self.fail_calls = fail_calls
        self.calls = 0

    def complete(self, messages, params):
        self.calls += 1
        if self.calls <= self.fail_calls:
            raise TransportError("synthetic failure")
        return self.inner.complete(messages, params)


def run(cfg, entries, lib=None, instance=INSTANCE, wrap=None):
    gateway = ScriptedGateway(entries)
    if wrap is not None:
        gateway = wrap(gateway)
    return run_instance(instance, cfg, lib or HintLibrary(), gateway)


def test_single_turn_single_sample(fast_cfg):
    trace = run(fast_cfg, [CLASS_REPLY, tagged(42.0)])
    assert len(trace.turns) == 1
    assert len(trace.turns[0].samples) == 1
    assert trace.final_answer.value == 42.0
    assert trace.predicted_classes == ["Minimum Cost Flow Problem"]


def test_crash_then_repair_with_error_fallback_feedback(fast_cfg):
    cfg = fast_cfg.with_overrides(M=2)
    trace = run(cfg, [CLASS_REPLY, CRASH, tagged(160.0)])
    turn0, turn1 = trace.turns
    assert turn0.majority is None  # every sample failed
    assert turn0.samples[0].outcome.status.value == "exec_error"
    # feedback for turn 1 falls back to the first raw trajectory
    assert turn1.fed_stderr == turn0.samples[0].outcome.stderr
    assert "NameError" in turn1.fed_stderr
    assert trace.final_answer.value == 160.0


def test_identical_samples_form_one_cluster(fast_cfg):
    cfg = fast_cfg.with_overrides(K=4)
    trace = run(cfg, [CLASS_REPLY, [tagged(7.0)] * 4])
    turn = trace.turns[0]
    assert len(turn.samples) == 4
    assert turn.majority == 0
    assert all(s.answer.value == 7.0 for s in turn.samples)


def test_majority_vote_across_disagreeing_samples(fast_cfg):
    cfg = fast_cfg.with_overrides(K=5)
    entries = [CLASS_REPLY, [tagged(4.0), tagged(6.0), tagged(4.0), CRASH, tagged(4.0)]]
    trace = run(cfg, entries)
    assert trace.turns[0].majority == 0
    assert trace.final_answer.value == 4.0


def test_no_code_inheritance(fast_cfg):
    cfg = fast_cfg.with_overrides(M=3)
    trace = run(cfg, [CLASS_REPLY, tagged(9.0), NO_CODE, NO_CODE])
    first = trace.turns[0].samples[0]
    for turn in trace.turns[1:]:
        sample = turn.samples[0]
        assert sample.completion_text == NO_CODE
        assert sample.extracted_code == first.extracted_code
        assert sample.outcome == first.outcome
        assert sample.answer == first.answer
    assert trace.final_answer.value == 9.0


def test_feedback_fidelity_byte_for_byte(fast_cfg):
    cfg = fast_cfg.with_overrides(M=3)
    noisy = (
        "log\n```python\nprint('preamble line')\nprint('__OPTIMIND_OBJ__=1.0')\n```\n"
    )
    trace = run(cfg, [CLASS_REPLY, noisy, tagged(2.0), tagged(2.0)])
    for m in range(1, 3):
        prev = trace.turns[m - 1]
        chosen = prev.samples[prev.majority] if prev.majority is not None else prev.samples[0]
        assert trace.turns[m].fed_stdout == chosen.outcome.stdout
        assert trace.turns[m].fed_stderr == chosen.outcome.stderr
    assert trace.turns[0].fed_stdout == "" and trace.turns[0].fed_stderr == ""


def test_classification_failure_degrades_to_hintless(fast_cfg):
    lib = HintLibrary(
        classes={"Minimum Cost Flow Problem": [HintEntry(error_summary="e", hint="h")]}
    )
    gateway = FailingGateway(ScriptedGateway([tagged(3.0)]), fail_calls=1)
    trace = run_instance(INSTANCE, fast_cfg, lib, gateway)
    assert trace.predicted_classes == []
    assert any(f.startswith("classification_failed") for f in trace.flags)
    assert trace.hints_used == []
    assert trace.final_answer.value == 3.0


def test_free_label_classification_flagged(fast_cfg):
    trace = run(fast_cfg, ["This is a routing problem", tagged(1.0)])
    assert trace.predicted_classes == ["This is a routing problem"]
    assert any(f.startswith("free_label") for f in trace.flags)
    assert trace.hints_used == []


def test_hinted_prompt_used_when_library_matches(fast_cfg):
    lib = HintLibrary(
        classes={"Minimum Cost Flow Problem": [HintEntry(error_summary="sign", hint="flip")]}
    )
    recorder = None

    def wrap(gateway):
        nonlocal recorder
        recorder = RecordingGateway(gateway)
        return recorder

    trace = run(fast_cfg, [CLASS_REPLY, tagged(5.0)], lib=lib, wrap=wrap)
    assert [h.key for h in trace.hints_used] == [("sign", "flip")]
    first_turn_request = recorder.requests[1][0]
    assert "Error analysis #1: sign, flip" in first_turn_request[0].content


def test_hints_disabled_renders_plain_prompt(fast_cfg):
    cfg = fast_cfg.with_overrides(hints_enabled=False)
    lib = HintLibrary(
        classes={"Minimum Cost Flow Problem": [HintEntry(error_summary="e", hint="h")]}
    )
    recorder = None

    def wrap(gateway):
        nonlocal recorder
        recorder = RecordingGateway(gateway)
        return recorder

    trace = run(cfg, [CLASS_REPLY, tagged(5.0)], lib=lib, wrap=wrap)
    assert trace.hints_used == []
    assert "Error analysis" not in recorder.requests[1][0][0].content


def test_conversation_grows_with_majority_messages(fast_cfg):
    cfg = fast_cfg.with_overrides(M=3)
    recorder = None

    def wrap(gateway):
        nonlocal recorder
        recorder = RecordingGateway(gateway)
        return recorder

    run(cfg, [CLASS_REPLY, tagged(1.0), tagged(2.0), NO_CODE], wrap=wrap)
    # request 0 = classification; request 1+m = turn m
    for m in range(3):
        messages, params = recorder.requests[1 + m]
        assert len(messages) == 1 + 2 * m
        assert params.n == cfg.K
    # the correction conversation embeds the previous majority completion
    assert recorder.requests[2][0][1].content == tagged(1.0)


def test_turn_gateway_failure_recorded_shortfall(fast_cfg):
    cfg = fast_cfg.with_overrides(M=2)
    # classification ok, turn 0 ok, turn 1 sampling fails
    gateway = ScriptedGateway([CLASS_REPLY, tagged(8.0)])
    trace = run_instance(INSTANCE, cfg, HintLibrary(), gateway)
    assert len(trace.turns) == 2
    assert trace.turns[1].samples == []
    assert trace.turns[1].majority is None
    assert any("turn_1_gateway_failure" in f for f in trace.flags)
    assert trace.final_answer.status is AnswerStatus.ERROR


def test_trace_round_trip(tmp_path, fast_cfg):
    cfg = fast_cfg.with_overrides(M=2, K=2)
    trace = run(cfg, [CLASS_REPLY, [tagged(1.0), CRASH], [NO_CODE, tagged(1.0)]])
    path = tmp_path / "traces.jsonl"
    write_traces([trace], path)
    loaded = read_traces(path)
    assert len(loaded) == 1
    assert loaded[0].to_dict() == trace.to_dict()
    assert isinstance(loaded[0], InstanceTrace)


def test_no_network_outside_gateway(fast_cfg, monkeypatch):
    import httpx

    def explode(*args, **kwargs):
        raise AssertionError("network request escaped the gateway mock")

    monkeypatch.setattr(httpx.Client, "send", explode)
    trace = run(fast_cfg, [CLASS_REPLY, tagged(2.0)])
    assert trace.final_answer.value == 2.0


def test_k1_m1_params_sent(fast_cfg):
    recorder = None

    def wrap(gateway):
        nonlocal recorder
        recorder = RecordingGateway(gateway)
        return recorder

    run(fast_cfg, [CLASS_REPLY, tagged(1.0)], wrap=wrap)
    classification_params: SamplingParams = recorder.requests[0][1]
    assert classification_params.n == 1
    assert classification_params.temperature == fast_cfg.temperature
