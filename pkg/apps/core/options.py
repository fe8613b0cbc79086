# apps/core/options.py
"""
Shared plumbing of the management commands: option declarations, the `--config` overlay
and the mapping of domain errors onto process exit codes.

Option precedence is: command-line flag > config file > settings defaults. Every option
is registered with an argparse default of None so that an unset flag can be told apart.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from dotenv import dotenv_values

from apps.core.exceptions import EXIT_IO, ConfigurationError, CorpusIOError, LCRankError
from apps.corpus.records import Corpus
from apps.corpus.services import lodo_split
from apps.ranker.bank import RankerBank, cadence_grid
from apps.ranker.config import Ablation, CurveEncoderVariant, ModelConfig, TrainingProfile

logger = logging.getLogger(__name__)


def lcrank_setting(key: str, fallback=None):
    return (getattr(settings, "LCRANK", {}) or {}).get(key, fallback)


# ----------------------------
# value parsers
# ----------------------------
def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in {"1", "true", "yes", "on"}:
        return True
    if value in {"0", "false", "no", "off"}:
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def parse_int_list(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(part) for part in str(text).split(",") if part.strip())
    except ValueError:
        raise ConfigurationError(f"expected comma-separated integers, got {text!r}") from None


def parse_lengths(text: str, epochs: int) -> tuple[int, ...]:
    """`0,3,6` or `cadence:3` (every third epoch strictly inside a run of `epochs`)."""
    text = str(text).strip()
    if text.startswith("cadence:"):
        try:
            step = int(text.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad cadence in {text!r}") from None
        if step < 1:
            raise ConfigurationError("cadence must be >= 1")
        return cadence_grid(epochs, step)
    lengths = parse_int_list(text)
    if not lengths:
        raise ConfigurationError("no lengths given")
    bad = [l for l in lengths if not 0 <= l <= epochs]  # noqa: E741
    if bad:
        raise ConfigurationError(f"lengths {bad} outside [0, {epochs}]")
    return tuple(sorted(set(lengths)))


# ----------------------------
# option declarations
# ----------------------------
@dataclass(frozen=True)
class Option:
    flag: str
    type: Callable = str
    default: object = None  # a value, or a zero-argument callable read at resolution time
    help: str = ""
    choices: Sequence[str] | None = None
    multiple: bool = False
    required: bool = False

    @property
    def dest(self) -> str:
        return self.flag.lstrip("-").replace("-", "_")

    def default_value(self):
        return self.default() if callable(self.default) else self.default

    def convert(self, raw):
        if self.multiple:
            items = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
            values = [self._convert_one(v) for v in items if str(v).strip()]
            return values
        return self._convert_one(raw)

    def _convert_one(self, raw):
        try:
            value = self.type(raw.strip() if isinstance(raw, str) else raw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{self.flag}: {exc}") from exc
        if self.choices is not None and value not in self.choices:
            raise ConfigurationError(f"{self.flag}: {value!r} not in {list(self.choices)}")
        return value

    def register(self, parser) -> None:
        kwargs = {"dest": self.dest, "default": None, "help": self.help}
        if self.type is parse_bool:
            kwargs["action"] = "store_const"
            kwargs["const"] = True
        else:
            kwargs["action"] = "append" if self.multiple else "store"
        parser.add_argument(self.flag, **kwargs)


SEED = Option("--seed", int, lambda: lcrank_setting("SEED", 42), "Random seed")

# steps, pairs, alpha and learning rate default to None: ModelConfig.from_settings fills them
# from the settings block and the training profile
MODEL_OPTIONS = (
    Option(
        "--profile",
        str,
        lambda: lcrank_setting("PROFILE", TrainingProfile.ACCEPTANCE),
        "Training profile; `acceptance` caps steps and pairs per step",
        choices=TrainingProfile.values,
    ),
    Option("--steps", int, None, "Adam steps per length"),
    Option("--pairs-per-step", int, None),
    Option("--alpha", float, None, "Ranking/reconstruction mix"),
    Option("--learning-rate", float, None),
    Option("--kernel-sizes", parse_int_list, (1, 2, 3, 4), "Curve kernel sizes, e.g. 1,2,3,4"),
    Option("--filters", int, 16, "Filters per kernel size"),
    Option(
        "--variant",
        str,
        CurveEncoderVariant.CONV_GLOBAL_MAX,
        "Curve encoder",
        choices=CurveEncoderVariant.values,
    ),
    Option("--final-head", parse_bool, False, "Also train the final-performance head"),
    Option("--ablation", str, Ablation.FULL, "Model component ablation", choices=Ablation.values),
)


def model_config(values: Mapping[str, object]) -> ModelConfig:
    return ModelConfig.from_settings(
        profile=values.get("profile"),
        seed=values.get("seed"),
        steps=values.get("steps"),
        pairs_per_step=values.get("pairs_per_step"),
        alpha=values.get("alpha"),
        learning_rate=values.get("learning_rate"),
        curve_kernel_sizes=values.get("kernel_sizes"),
        filters_per_kernel=values.get("filters"),
        curve_encoder_variant=values.get("variant"),
        with_final_head=values.get("final_head"),
        ablation=values.get("ablation"),
    )


def load_bank(
    values: Mapping[str, object], corpus: Corpus, *, require_final_head: bool = False
) -> RankerBank:
    """A saved bank from --bank-dir, or one that trains missing lengths on demand."""
    holdout = values["holdout"]
    if values.get("bank_dir"):
        bank = RankerBank.load(values["bank_dir"])
        if bank.holdout and bank.holdout != holdout:
            raise ConfigurationError(
                f"bank in {values['bank_dir']} was trained with {bank.holdout!r} held out, "
                f"not {holdout!r}"
            )
        if require_final_head and not bank.config.with_final_head:
            raise ConfigurationError(
                f"bank in {values['bank_dir']} was trained without the final-performance "
                "head; retrain with --final-head"
            )
        return bank
    train, _ = lodo_split(corpus, holdout)
    return RankerBank(model_config(values), train_records=train)


def read_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise CorpusIOError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {k.strip().lower().replace("-", "_"): v for k, v in values.items() if v is not None}


def resolve_options(
    options: Iterable[Option], cli: Mapping[str, object], file_values: Mapping[str, str]
) -> dict[str, object]:
    resolved: dict[str, object] = {}
    known = set()
    for option in options:
        known.add(option.dest)
        raw = cli.get(option.dest)
        if raw is not None:
            value = option.convert(raw)
        elif option.dest in file_values:
            value = option.convert(file_values[option.dest])
        else:
            value = option.default_value()
        if value is None and option.required:
            raise ConfigurationError(f"{option.flag} is required")
        resolved[option.dest] = value
    unknown = set(file_values) - known
    if unknown:
        raise ConfigurationError(f"unknown keys in config file: {sorted(unknown)}")
    return resolved


def config_header(command: str, values: Mapping[str, object]) -> dict[str, object]:
    """The resolved configuration as it is written atop every CSV output."""
    header: dict[str, object] = {"command": command}
    for key, value in values.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, str):
            value = str(value)
        header[key] = "" if value is None else value
    return header


# ----------------------------
# base command
# ----------------------------
class LCRankCommand(BaseCommand):
    """Declarative options, config overlay, and exit codes for LCRankError subclasses."""

    option_specs: tuple[Option, ...] = ()

    def add_arguments(self, parser):
        parser.add_argument("--config", dest="config", default=None, help="key=value file")
        for option in self.option_specs:
            option.register(parser)

    def handle(self, *args, **cli):
        command = self.__module__.rsplit(".", 1)[-1]
        try:
            file_values = read_config_file(cli["config"]) if cli.get("config") else {}
            values = resolve_options(self.option_specs, cli, file_values)
            logger.info("Resolved %s configuration: %s", command, values)
            self.header = config_header(command, values)
            self.run(values)
        except LCRankError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        except OSError as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc

    def run(self, values: dict[str, object]) -> None:
        raise NotImplementedError

    def done(self, message: str) -> None:
        self.stdout.write(self.style.SUCCESS(message))


__all__ = [
    "Option",
    "SEED",
    "MODEL_OPTIONS",
    "LCRankCommand",
    "lcrank_setting",
    "parse_bool",
    "parse_int_list",
    "parse_lengths",
    "model_config",
    "load_bank",
    "read_config_file",
    "resolve_options",
    "config_header",
]
