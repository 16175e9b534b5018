import pytest

from ttekit.config import load_config, load_resources
from ttekit.corpus import Event, LabeledTweet, Tweet, hashtag_position, parse_timestamp


@pytest.fixture(scope="session")
def resources():
    """Shipped sample lexicon, grammar, rules and word lists."""
    return load_resources(load_config())


@pytest.fixture(scope="session")
def patterns(resources):
    return resources.patterns


@pytest.fixture(scope="session")
def ruleset(resources):
    return resources.ruleset


def make_tweet(
    tweet_id="t1",
    text="hallo",
    posted="2012-03-04T12:00:00+00:00",
    event_id="ev1",
):
    return Tweet(tweet_id, text, parse_timestamp(posted), event_id)


def make_labeled(tte_hours, text="hallo", tweet_id="t1", event_id="ev1", posted=None):
    """LabeledTweet with a given TTE; posting time derived when absent."""
    from datetime import timedelta

    start = parse_timestamp("2012-03-11T15:00:00+00:00")
    posted_at = (
        parse_timestamp(posted)
        if posted
        else start - timedelta(hours=tte_hours)
    )
    tweet = Tweet(tweet_id, text, posted_at, event_id)
    return LabeledTweet(tweet, tte_hours, hashtag_position(text, f"#{event_id}"))


def make_event(event_id="ev1", start="2012-03-11T15:00:00+00:00"):
    return Event(event_id, f"#{event_id}", parse_timestamp(start))
