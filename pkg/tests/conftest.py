import pytest

from metrotwin.campaign import build_design, default_part_catalog, generate_campaign


@pytest.fixture(scope="session")
def catalog():
    return default_part_catalog()


@pytest.fixture(scope="session")
def campaign_records(catalog):
    """One reference campaign, shared read-only across tests."""
    design = build_design(catalog, seed=42)
    return generate_campaign(design, seed=42)
