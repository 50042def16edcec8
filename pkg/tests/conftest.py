import pytest

from jtfe.data import SANDHI_RULES, TOY_CONN, TOY_CORPUS, TOY_LEXICON
from jtfe.lexicon import ConnectionMatrix, Lexicon, load_corpus
from jtfe.nn.train import TrainSchedule
from jtfe.predictors import TaskConfig
from jtfe.rules import SandhiRuleTable
from jtfe.workflows import TaskAssets, train_task


@pytest.fixture(scope="session")
def toy_corpus():
    return load_corpus(TOY_CORPUS)


@pytest.fixture(scope="session")
def toy_rules():
    return SandhiRuleTable.load(SANDHI_RULES)


@pytest.fixture(scope="session")
def toy_lexicon():
    return Lexicon.load(TOY_LEXICON)


@pytest.fixture(scope="session")
def toy_conn():
    return ConnectionMatrix.load(TOY_CONN)


@pytest.fixture(scope="session")
def toy_assets(toy_rules):
    return TaskAssets(rule_table=toy_rules)


@pytest.fixture(scope="session")
def trained_heads(toy_corpus, toy_assets):
    """One overfit head per task, trained on the bundled corpus (seed 1)."""
    heads = {}
    for task in ("pd", "apbp", "anpp"):
        tm, history = train_task(
            TaskConfig(task=task, hidden=32, seed=1),
            toy_corpus,
            toy_corpus,
            TrainSchedule(max_epochs=200, seed=1),
            toy_assets,
        )
        heads[task] = (tm, history)
    return heads
