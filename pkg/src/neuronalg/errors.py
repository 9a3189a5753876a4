"""Exception hierarchy shared by all neuronalg modules."""


class NeuronalgError(Exception):
    """Base class for all errors raised by this package."""


class InvalidPolicy(NeuronalgError):
    """Channel policy does not match the input image kind."""


class InvalidParameter(NeuronalgError):
    """A numeric parameter is outside its legal range."""


class ShapeError(NeuronalgError):
    """Two rasters that must share dimensions do not."""


class CalibrationError(NeuronalgError):
    """Iterative noise calibration failed to reach the target PSNR."""


class DegenerateHistogram(NeuronalgError):
    """Histogram has fewer than two occupied bins; no threshold exists."""


class EmptyForeground(NeuronalgError):
    """A binary mask contains no foreground pixels."""


class EmptyMarkers(NeuronalgError):
    """A marker map contains no nonzero labels."""


class EmptyLabelMap(NeuronalgError):
    """A label map contains no labels."""


class UnknownLabel(NeuronalgError):
    """A requested label id is absent from the label map."""


class EmptyRegion(NeuronalgError):
    """A pixel region that must be non-empty is empty."""


class DatasetFormatError(NeuronalgError):
    """A dataset entry does not match the documented layout."""


class EmptyDataset(NeuronalgError):
    """An operation requires at least one dataset entry."""


class IoError(NeuronalgError):
    """An image file could not be read or decoded."""
