"""chorus-wsi: choreography projection, guard-sensitive session typing,
and whole-spectrum implementation checking."""

__version__ = "0.1.0"
