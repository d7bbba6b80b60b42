import math
import logging

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


class AQVError(Exception):
    """Base error for the toolkit"""


class ValidationError(AQVError, ValueError):
    """Input rejected before any computation"""


class PhysicalityError(ValidationError):
    """Coefficients or Green components that no passive environment produces"""


class IntegrationError(AQVError, RuntimeError):
    """Numerical integration left the physical domain"""


def format_float(value):
    """Format a float with a fixed number of significant digits"""
    value = float(value)
    if value == 0.0:
        # no '-0'
        return "0"
    return format(value, f".{SIGNIFICANT_DIGITS}g")


def format_complex(value):
    """Format a complex number as 're+imj' with fixed precision"""
    value = complex(value)
    imag = format_float(value.imag)
    sign = "" if imag.startswith("-") else "+"
    return f"{format_float(value.real)}{sign}{imag}j"


def format_value(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, complex):
        return format_complex(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return format_list([format_value(v) for v in value], max_items=len(value) or 1)
    return str(value)


def format_list(items, max_items=10, separator=", "):
    """Format a list of items with truncation"""
    if not items:
        return "None"

    if len(items) <= max_items:
        return separator.join(items)
    else:
        visible_items = items[:max_items]
        remaining = len(items) - max_items
        return separator.join(visible_items) + f" (+{remaining} more)"


def create_report(title, fields):
    """Create a standardized 'key = value' text report"""
    lines = [f"# {title}"]
    for key, value in fields.items():
        lines.append(f"{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"


def format_row(values):
    """Format one CSV row with the fixed float precision"""
    row = []
    for value in values:
        if value is None:
            row.append("")
        elif isinstance(value, float):
            row.append(format_float(value))
        else:
            row.append(str(value))
    return row


def validate_input(input_type, value):
    """Validate a numeric input based on its physical type"""
    try:
        number = float(value)
    except (TypeError, ValueError):
        return False, f"{input_type} must be a number, got {value!r}"

    if math.isnan(number):
        return False, f"{input_type} must not be NaN"

    if input_type in ('rate', 'time'):
        if number < 0 or math.isinf(number):
            return False, f"{input_type} must be finite and >= 0, got {number}"

    elif input_type in ('length', 'step', 'positive_rate'):
        if number <= 0 or math.isinf(number):
            return False, f"{input_type} must be finite and > 0, got {number}"

    elif input_type == 'na':
        if not 0.0 <= number <= 1.0:
            return False, f"numerical aperture must lie in [0, 1], got {number}"

    elif input_type == 'reflectance':
        if not 0.0 <= number <= 1.0:
            return False, f"reflectance must lie in [0, 1], got {number}"

    elif input_type == 'angle_deg':
        if not -90.0 <= number <= 90.0:
            return False, f"angle must lie in [-90, 90] degrees, got {number}"

    elif input_type == 'node_count':
        if number < 16 or number != int(number):
            return False, f"node count must be an integer >= 16, got {value}"

    return True, "Valid"


def require(input_type, value):
    """Validate an input and return it as float, raising ValidationError otherwise"""
    valid, message = validate_input(input_type, value)
    if not valid:
        raise ValidationError(message)
    return float(value)


def parse_complex(value):
    """Complex number from a number, a string like '0.2j' or a [re, im] pair"""
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError(f"expected [re, im], got {value!r}")
            result = complex(float(value[0]), float(value[1]))
        elif isinstance(value, str):
            result = complex(value.replace(" ", ""))
        else:
            result = complex(value)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"not a complex number: {value!r}") from e
    if not (math.isfinite(result.real) and math.isfinite(result.imag)):
        raise ValidationError(f"complex value must be finite, got {value!r}")
    return result


def generate_error_line(error):
    """Machine-parsable single error line"""
    message = str(error).replace("\n", " ").strip() or error.__class__.__name__
    return f"error: {message}"
