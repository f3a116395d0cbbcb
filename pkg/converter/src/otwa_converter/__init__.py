"""otwa_converter: pretrained checkpoint to OTWA archive conversion."""

from .convert import ConversionError, convert
from .otwa import write_archive

__all__ = ["ConversionError", "convert", "write_archive"]
