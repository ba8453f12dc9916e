import datetime as dt

import pytest

from promptmine.data import (
    ForecastWindow,
    PoiRecord,
    SynthConfig,
    day_record,
    make_windows,
    split_dataset,
    synthesize_corpus,
)

# The worked Mobil example: Mon-Wed history, Thu target, 00:00-24:00 shift.
MON = (0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 1, 2, 0, 2, 1, 0, 0, 0, 0, 1, 0, 0, 0)
TUE = (0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 2, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1)
WED = (0, 0, 0, 0, 0, 1, 0, 0, 1, 1, 1, 1, 0, 0, 1, 1, 1, 0, 3, 0, 0, 1, 0, 0)
THU = (0, 1, 0, 1, 0, 0, 1, 2, 1, 0, 0, 1, 3, 0, 1, 2, 0, 1, 0, 1, 0, 0, 2, 0)


def make_example_window():
    start = dt.date(2022, 12, 26)  # a Monday
    series = [MON, TUE, WED, THU]
    days = tuple(
        day_record(start + dt.timedelta(days=i), series[i]) for i in range(4)
    )
    poi = PoiRecord(
        poi_id="mobil-osseo",
        brand="Mobil",
        region="WI, Osseo",
        open_hour=0,
        close_hour=24,
        days=days,
    )
    return ForecastWindow(poi=poi, history=days[:3], target=days[3])


@pytest.fixture
def example_window():
    return make_example_window()


@pytest.fixture(scope="session")
def small_corpus():
    return synthesize_corpus(SynthConfig(num_pois=60, days=7, seed=42))


@pytest.fixture(scope="session")
def small_split(small_corpus):
    windows = make_windows(small_corpus, 3)
    return split_dataset(windows, seed=42)
