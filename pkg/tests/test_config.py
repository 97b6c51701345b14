import pytest
from pydantic import ValidationError as PydanticValidationError

from kiro_leno.operator_learning.config import ExperimentConfig, RuntimeSettings, get_config, reset_config
from kiro_leno.operator_learning.entities.training import LossMode
from kiro_leno.operator_learning.errors import ValidationError


def test_defaults_and_file_round_trip(tmp_path):
    config = ExperimentConfig().with_overrides(["problem.name=heat", "training.epochs=7"])
    path = config.to_file(tmp_path / "config.json")
    loaded = ExperimentConfig.from_file(path)
    assert loaded == config
    assert loaded.training.epochs == 7


def test_yaml_config_files(tmp_path):
    path = tmp_path / "kpp.yml"
    path.write_text("problem:\n  name: kpp\n  overrides: {resolution: 65}\nbasis:\n  modes: 12\n", encoding="utf-8")
    problem = ExperimentConfig.from_file(path).problem_spec()
    assert problem.domain.shape == (65,)
    assert problem.defaults.modes == 12


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(PydanticValidationError):
        ExperimentConfig.model_validate({"training": {"epoch": 3}})
    with pytest.raises(PydanticValidationError):
        ExperimentConfig().with_overrides(["optimizer.lr=0.1"])


def test_missing_file_and_bad_content(tmp_path):
    with pytest.raises(FileNotFoundError):
        ExperimentConfig.from_file(tmp_path / "nope.json")
    (tmp_path / "list.json").write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValidationError, match="mapping"):
        ExperimentConfig.from_file(tmp_path / "list.json")


def test_overrides_parse_yaml_values():
    config = ExperimentConfig().with_overrides(
        ["model.hidden=[32, 32]", "training.loss_mode=data-only", "problem.overrides={resolution: 17}", "data.force_dt=true"]
    )
    assert config.model.hidden == [32, 32]
    assert config.training.loss_mode == LossMode.DATA_ONLY
    assert config.problem.overrides == {"resolution": 17}
    assert config.data.force_dt is True
    with pytest.raises(ValidationError, match="section.key=value"):
        ExperimentConfig().with_overrides(["training.epochs"])


def test_section_validators():
    with pytest.raises(PydanticValidationError, match="reserved"):
        ExperimentConfig().with_overrides(["model.lift_in_input=true"])
    with pytest.raises(PydanticValidationError, match="unknown metrics"):
        ExperimentConfig().with_overrides(["acceptance.thresholds={E_Max: 0.1}"])
    with pytest.raises(PydanticValidationError):
        ExperimentConfig().with_overrides(["model.hidden=[0]"])


def test_problem_spec_takes_section_values():
    config = ExperimentConfig().with_overrides(
        ["problem.name=heat", "data.samples=5", "data.record_dt=0.0005", "horizons.train=4", "horizons.eval=6"]
    )
    defaults = config.problem_spec().defaults
    assert (defaults.samples, defaults.record_dt, defaults.train_horizon, defaults.eval_horizon) == (5, 0.0005, 4, 6)


def test_train_config_needs_a_seed(tmp_path):
    config = ExperimentConfig().with_overrides(["problem.name=heat", "training.lr=0.01", "training.decay_every=10"])
    problem = config.problem_spec()
    with pytest.raises(ValidationError, match="seed"):
        config.train_config(problem)
    train = config.train_config(problem, seed=4, checkpoint_dir=tmp_path)
    assert train.seed == 4
    assert train.optimizer.lr == 0.01 and train.optimizer.decay_every == 10
    assert train.epochs == problem.defaults.epochs
    assert train.horizon == problem.defaults.train_horizon
    assert config.with_overrides(["training.seed=2"]).train_config(problem).seed == 2


def test_artifact_paths(tmp_path):
    paths = ExperimentConfig().with_overrides([f"paths.out={tmp_path}", "paths.model=elsewhere/m.leno"]).paths
    assert paths.resolve("basis") == tmp_path / "basis.leno"
    assert paths.resolve("reports") == tmp_path / "reports"
    assert str(paths.resolve("model")) == "elsewhere/m.leno"


def test_runtime_settings_from_yaml_and_env(tmp_path, monkeypatch):
    path = tmp_path / "project.yml"
    path.write_text("local:\n  threads: 3\n  log_level: DEBUG\ndev:\n  threads: 8\n", encoding="utf-8")
    env_dir = str(tmp_path / "config")
    settings = RuntimeSettings.from_yaml_and_env(path, "local", env_dir)
    assert (settings.threads, settings.log_level, settings.environment) == (3, "DEBUG", "local")
    assert RuntimeSettings.from_yaml_and_env(path, "dev", env_dir).threads == 8
    monkeypatch.setenv("LENO_THREADS", "5")
    assert RuntimeSettings.from_yaml_and_env(path, "dev", env_dir).threads == 5
    with pytest.raises(ValueError, match="Invalid environment"):
        RuntimeSettings.from_yaml_and_env(path, "staging", env_dir)


def test_settings_singleton(monkeypatch):
    first = get_config()
    assert get_config() is first
    monkeypatch.setenv("LENO_THREADS", "6")
    assert get_config().threads == first.threads
    reset_config()
    assert get_config().threads == 6
