import pytest

from cotforge.lexical import load_default_lexicon, load_seed_model
from cotforge.model import (
    GroundingAnnotation,
    QAKind,
    QAPair,
    Keyword,
    TermEntry,
    TopicItem,
    VideoSample,
)
from cotforge.scoring import ScoringConfig


@pytest.fixture(scope="session")
def lexicon():
    return load_default_lexicon()


@pytest.fixture(scope="session")
def seed_lm():
    return load_seed_model()


@pytest.fixture(scope="session")
def config():
    return ScoringConfig.default()


def build_sample(
    video_id="vid0001",
    description="The girl runs on the bitumen road while a dog watches.",
    objects=("girl", "road", "bitumen"),
    actions=("run",),
    topic=None,
    qa_pairs=None,
):
    if qa_pairs is None:
        qa_pairs = (
            QAPair(
                qa_id="q1",
                question="What does the girl do?",
                answer="B",
                kind=QAKind.MC,
                options=(("A", "eats"), ("B", "runs"), ("C", "sleeps")),
            ),
        )
    return VideoSample(
        video_id=video_id,
        source="test",
        description=description,
        grounding=GroundingAnnotation(
            objects=tuple(TermEntry(term=o) for o in objects),
            actions=tuple(TermEntry(term=a) for a in actions),
        ),
        qa_pairs=qa_pairs,
        topic=topic,
    )


@pytest.fixture
def sample():
    return build_sample()


@pytest.fixture
def topic_sample():
    return build_sample(
        video_id="vid0002",
        topic=TopicItem(name="hurdling", concept_terms=("track and field",)),
        qa_pairs=(
            QAPair(
                qa_id="q1",
                question="Is the video relevant to the topic 'hurdling'?",
                answer="yes",
                kind=QAKind.TOPIC_RELEVANCE,
                keywords=(Keyword(keyword="hurdling"),),
            ),
        ),
    )
