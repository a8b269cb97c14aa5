"""Command-line interface.

Exit codes: 0 on success, 1 for user errors (bad input, no route, missing
credentials), 2 for internal errors.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import sys
from pathlib import Path

import click

from . import accounts
from .alerts import AlertEngine, ChangeKind, RuleChangeEvent, default_channels
from .conditions import RuleStore, parse_rule, serialize_rule, validate_rule
from .demo import run_demo
from .errors import CityRouteError, NoRouteError, ParseError
from .network import ingest_network, network_to_bytes
from .routing import plan_route
from .service import ServiceConfig, parse_mode, serve

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL = 2


@click.group()
@click.option(
    "--data-dir", envvar="ROUTE_DATA_DIR", default="data", show_default=True,
    type=click.Path(path_type=Path), help="Directory holding the installed network and stores.",
)
@click.pass_context
def cli(ctx: click.Context, data_dir: Path):
    """Time-aware route planning over a managed road network."""
    ctx.obj = data_dir


def _load_network(data_dir: Path):
    network_file = data_dir / "network.json"
    if not network_file.is_file():
        raise click.ClickException(
            f"no network installed in {data_dir}; run 'ingest <file>' first"
        )
    return ingest_network(network_file.read_bytes())


@cli.command()
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
def ingest(data_dir: Path, network_file: Path):
    """Validate NETWORK_FILE and install it as the active network."""
    network = ingest_network(network_file.read_bytes())
    data_dir.mkdir(parents=True, exist_ok=True)
    (data_dir / "network.json").write_bytes(network_to_bytes(network))
    click.echo(
        f"installed network '{network.crs_label}': "
        f"{len(network.vertices)} vertices, {len(network.segments)} segments"
    )


def _parse_point(raw: str, flag: str) -> tuple[float, float]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise click.BadParameter(f"{flag} must look like X,Y")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise click.BadParameter(f"{flag} must be numeric X,Y") from None


@cli.command()
@click.option("--from", "origin", required=True, help="Origin point as X,Y in network meters.")
@click.option("--to", "destination", required=True, help="Destination point as X,Y.")
@click.option("--at", "when", default=None, help="ISO-8601 local instant to plan for.")
@click.option("--mode", "mode_name", default="strict", show_default=True,
              type=click.Choice(["strict", "faithful"], case_sensitive=False))
@click.option("--as-user", "as_user", default=None, metavar="USER:PASSWORD",
              help="Account credentials; required for instants away from now.")
@click.pass_obj
def route(data_dir: Path, origin: str, destination: str, when: str | None,
          mode_name: str, as_user: str | None):
    """Plan a route and print the result as JSON."""
    network = _load_network(data_dir)
    rules = RuleStore(data_dir / "rules.jsonl").list_rules()
    requested_t = None
    if when is not None:
        try:
            requested_t = dt.datetime.fromisoformat(when)
        except ValueError:
            raise click.BadParameter(f"--at: bad datetime {when!r}") from None
    session = None
    now = dt.datetime.now()
    if as_user is not None:
        username, _, password = as_user.partition(":")
        account = accounts.UserStore(data_dir / "users.jsonl").verify_credentials(username, password)
        if account is None:
            raise click.ClickException("credentials not accepted")
        session = accounts.Session(token="cli", user_id=account.id,
                                   expires_at=now + dt.timedelta(minutes=5))
    effective_t = accounts.authorize_query(session, requested_t, now)
    result = plan_route(
        network, rules,
        _parse_point(origin, "--from"), _parse_point(destination, "--to"),
        effective_t, mode=parse_mode(mode_name),
    )
    click.echo(result.canonical_json().decode("utf-8"))


@cli.command(name="serve")
@click.option("--config", "config_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
def serve_command(config_file: Path):
    """Start the HTTP service described by a config file."""
    config = ServiceConfig.from_file(config_file).apply_env(os.environ)
    serve(config)


@cli.group()
def rule():
    """Inspect or change the condition rules of the installed network."""


def _engine_for(data_dir: Path) -> AlertEngine:
    return AlertEngine(
        trips=accounts.TripStore(data_dir / "trips.jsonl"),
        users=accounts.UserStore(data_dir / "users.jsonl"),
        channels=default_channels(data_dir / "outbox"),
        log_path=data_dir / "alerts.jsonl",
    )


@rule.command(name="add")
@click.argument("rule_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_obj
def rule_add(data_dir: Path, rule_file: Path):
    """Add one rule from a JSON document and evaluate trip alerts."""
    network = _load_network(data_dir)
    try:
        decoded = json.loads(rule_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"rule file is not valid JSON: {exc}") from exc
    new_rule = parse_rule(decoded)
    validate_rule(new_rule, network)
    store = RuleStore(data_dir / "rules.jsonl")
    generation = store.add(new_rule)
    _, rules_after = store.snapshot()
    event = RuleChangeEvent(id=generation, change=ChangeKind.CREATED,
                            rule=new_rule, at=dt.datetime.now(), actor=0)
    produced = _engine_for(data_dir).process_event(event, network, rules_after)
    click.echo(f"added rule {new_rule.id} (generation {generation}, {len(produced)} notifications)")


@rule.command(name="rm")
@click.argument("rule_id", type=int)
@click.pass_obj
def rule_rm(data_dir: Path, rule_id: int):
    """Remove a rule by id and evaluate trip alerts."""
    network = _load_network(data_dir)
    store = RuleStore(data_dir / "rules.jsonl")
    generation, removed = store.remove(rule_id)
    _, rules_after = store.snapshot()
    event = RuleChangeEvent(id=generation, change=ChangeKind.DELETED,
                            rule=removed, at=dt.datetime.now(), actor=0)
    produced = _engine_for(data_dir).process_event(event, network, rules_after)
    click.echo(f"removed rule {rule_id} (generation {generation}, {len(produced)} notifications)")


@rule.command(name="list")
@click.pass_obj
def rule_list(data_dir: Path):
    """Print the current rules as a JSON array."""
    store = RuleStore(data_dir / "rules.jsonl")
    docs = [serialize_rule(r) for r in sorted(store.list_rules(), key=lambda r: r.id)]
    click.echo(json.dumps(docs, indent=2))


@cli.command()
def demo():
    """Run the built-in scenario checks on the bundled sample network."""
    run_demo(echo=click.echo)
    click.echo("demo complete")


def run_cli(argv=None) -> int:
    """Entry point used by tests and by main(); returns the exit code."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return EXIT_USER_ERROR
    except click.Abort:
        return EXIT_USER_ERROR
    except NoRouteError as exc:
        click.echo(f"no route: {exc}", err=True)
        return EXIT_USER_ERROR
    except CityRouteError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USER_ERROR
    except AssertionError as exc:
        click.echo(f"check failed: {exc}", err=True)
        return EXIT_INTERNAL
    except Exception as exc:  # anything unplanned is an internal error
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
