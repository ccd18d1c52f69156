import json
import time

import pytest

from staybroker.errors import ScenarioError
from staybroker.harness import (
    check_lines,
    check_trace_text,
    load_scenario,
    random_scenario,
    run_scenario,
    scenario_from_dict,
    trace_digest,
)
from staybroker.harness.cli import main as cli_main


def minimal_scenario(events=(), guesthouses=(), users=(), zones=(("Z1", "Hills"),)):
    return {
        "version": 1,
        "name": "inline",
        "seed": 1,
        "horizon": 4000,
        "latency": "fixed",
        "topology": {
            "zones": [{"zone_id": z, "name": n} for z, n in zones],
            "users": list(users),
            "guesthouses": list(guesthouses),
        },
        "events": list(events),
    }


class TestScenarioLoading:
    def test_bundled_names_resolve(self):
        for name in ("figure4", "bypass", "timeout", "race-lastroom"):
            scenario = load_scenario(name)
            assert scenario.name == name

    def test_scenario_suffix_is_accepted(self):
        assert load_scenario("figure4.scenario").name == "figure4"

    def test_random_pattern_generates(self):
        scenario = load_scenario("random-5", seed=3)
        assert scenario.name == "random-5"
        assert len([e for e in scenario.events if e.kind == "request"]) == 5
        assert len(scenario.topology.guesthouses) <= 10

    def test_unknown_name_lists_options(self):
        with pytest.raises(ScenarioError) as err:
            load_scenario("figure5")
        assert "figure4" in str(err.value)

    def test_validation_reports_line_numbers(self, tmp_path):
        raw = minimal_scenario(
            users=[{"user_id": "u1", "name": "Ana"}],
            events=[
                {"ref": "r1", "at": 10, "kind": "request", "user_id": "ghost",
                 "request": {"zone": None, "persons": 1,
                             "arrival": "2026-07-01", "departure": "2026-07-02",
                             "rooms": {"single": 1, "double": 0, "triple": 0},
                             "max_total_price": None, "required_facilities": []}},
                {"at": 5, "kind": "select", "ref": "r9", "rank": 0},
            ],
        )
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(raw, indent=1))
        with pytest.raises(ScenarioError) as err:
            load_scenario(str(path))
        text = path.read_text()
        problems = err.value.problems
        assert any("unknown user 'ghost'" in p for p in problems)
        assert any("non-decreasing" in p for p in problems)
        assert any("unknown request 'r9'" in p for p in problems)
        # Every problem names a line inside the file.
        lines = text.count("\n") + 1
        for problem in problems:
            assert problem.startswith("line ")
            assert int(problem.split()[1].rstrip(":")) <= lines

    def test_json_syntax_errors_carry_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n "version": 1,\n broken\n}')
        with pytest.raises(ScenarioError) as err:
            load_scenario(str(path))
        assert any(p.startswith("line 3") for p in err.value.problems)


class TestRunScenario:
    def test_figure4_shapes_and_speed(self):
        start = time.monotonic()
        result = run_scenario(load_scenario("figure4"))
        elapsed = time.monotonic() - start
        assert elapsed < 1.0
        assert result.ok
        request = result.report["requests"][0]
        assert request["proposals"] == 2
        assert request["ranked"][0]["guesthouses"] == ["G1", "G3"]
        assert request["ranked"][1]["guesthouses"] == ["G2"]
        assert request["outcome"]["outcome"] == "booked"
        refusal = [
            line for line in result.trace_lines
            if '"collab-sorry"' in line and '"ga:G2"' in line
        ]
        assert refusal and "already-participating" in refusal[0]

    def test_empty_scenario_runs_clean(self):
        scenario = scenario_from_dict(minimal_scenario())
        result = run_scenario(scenario)
        assert result.ok
        envelopes = [l for l in result.trace_lines if "performative" in json.loads(l)]
        assert envelopes == []

    def test_race_lastroom_books_exactly_once(self):
        result = run_scenario(load_scenario("race-lastroom"))
        assert result.ok
        outcomes = {r["ref"]: r["outcome"]["outcome"] for r in result.report["requests"]}
        assert sorted(outcomes.values()) == ["booked", "failed"]
        snapshot = json.loads(result.trace_lines[-1])["data"]
        confirmed = [b for b in snapshot["bookings"] if b["state"] == "confirmed"]
        assert len(confirmed) == 1

    def test_timeout_scenario_marks_missing_agent(self):
        result = run_scenario(load_scenario("timeout"))
        assert result.ok
        timeouts = [json.loads(l) for l in result.trace_lines
                    if '"timeout"' in l and '"event"' in l]
        assert any("ga:G2" in t.get("missing", []) for t in timeouts)
        assert result.report["requests"][0]["proposals"] == 2

    def test_same_seed_same_digest(self):
        for name in ("figure4", "random-25"):
            first = run_scenario(load_scenario(name, seed=42), seed=42)
            second = run_scenario(load_scenario(name, seed=42), seed=42)
            assert trace_digest(first.trace_text()) == trace_digest(second.trace_text())

    def test_different_seeds_differ(self):
        first = run_scenario(load_scenario("random-25", seed=1), seed=1)
        second = run_scenario(load_scenario("random-25", seed=2), seed=2)
        assert trace_digest(first.trace_text()) != trace_digest(second.trace_text())

    def test_500_request_scenario_replays_identically(self):
        scenario = load_scenario("random-500", seed=42)
        digests = set()
        for _ in range(2):
            result = run_scenario(scenario, seed=42)
            assert result.ok
            digests.add(trace_digest(result.trace_text()))
        assert len(digests) == 1


class TestChecker:
    def _healthy_lines(self):
        result = run_scenario(load_scenario("figure4"))
        return [json.loads(l) for l in result.trace_lines]

    def test_healthy_trace_passes_everything(self):
        results = check_lines(self._healthy_lines())
        assert all(r["passed"] for r in results)

    def test_planted_forbidden_pair_fails_permission(self):
        lines = self._healthy_lines()
        lines.insert(3, {
            "v": 1, "msg_id": "pa:u1#999999", "request_id": "req-x",
            "sender": "pa:u1", "receiver": "ga:G1", "performative": "ask",
            "body": {}, "sent_at": 0, "auth_tag": "00",
        })
        by_name = {r["name"]: r for r in check_lines(lines)}
        assert not by_name["permission"]["passed"]

    def test_planted_duplicate_tell_fails_exclusivity(self):
        lines = self._healthy_lines()
        tells = [l for l in lines if l.get("performative") == "tell"
                 and l.get("sender", "").startswith("ga:")]
        dup = json.loads(json.dumps(tells[0]))
        dup["msg_id"] = dup["msg_id"] + "-dup"
        dup["body"]["proposal"]["proposal_id"] = "planted"
        lines.append(dup)
        by_name = {r["name"]: r for r in check_lines(lines)}
        assert not by_name["exclusivity"]["passed"]

    def test_tampered_snapshot_fails_conservation(self):
        lines = self._healthy_lines()
        snapshot = lines[-1]
        rows = next(iter(snapshot["data"]["guesthouses"].values()))["rows"]
        rows[0]["free"] += 1
        by_name = {r["name"]: r for r in check_lines(lines)}
        assert not by_name["conservation"]["passed"]

    def test_unparseable_trace_raises(self):
        with pytest.raises(ValueError):
            check_trace_text('{"v": 1}\nnot json at all\n')

    def test_checker_is_pure_over_the_trace(self):
        lines = self._healthy_lines()
        assert check_lines(lines) == check_lines(lines)


class TestCli:
    def test_run_check_digest_round_trip(self, tmp_path, capsys):
        trace = tmp_path / "out.jsonl"
        code = cli_main(["run", "figure4", "--seed", "42", "--trace", str(trace)])
        assert code == 0
        out = capsys.readouterr().out
        assert "property exclusivity: PASS" in out
        assert trace.exists()

        assert cli_main(["check", str(trace)]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 7

        assert cli_main(["digest", str(trace)]) == 0
        digest = capsys.readouterr().out.strip()
        assert len(digest) == 64

    def test_check_flags_planted_violation(self, tmp_path, capsys):
        trace = tmp_path / "out.jsonl"
        cli_main(["run", "figure4", "--trace", str(trace)])
        capsys.readouterr()
        planted = {
            "v": 1, "msg_id": "pa:u1#999999", "request_id": "req-x",
            "sender": "pa:u1", "receiver": "ga:G1", "performative": "ask",
            "body": {}, "sent_at": 0, "auth_tag": "00",
        }
        trace.write_text(trace.read_text() + json.dumps(planted) + "\n")
        assert cli_main(["check", str(trace)]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_bad_scenario_exits_2(self, tmp_path, capsys):
        assert cli_main(["run", "no-such-scenario"]) == 2
        path = tmp_path / "bad.json"
        path.write_text("{]")
        assert cli_main(["run", str(path)]) == 2
        assert cli_main(["check", str(tmp_path / "missing.jsonl")]) == 2

    def test_unparseable_trace_exits_2(self, tmp_path, capsys):
        trace = tmp_path / "garbled.jsonl"
        trace.write_text("not json\n")
        assert cli_main(["check", str(trace)]) == 2
