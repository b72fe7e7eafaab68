"""Line-oriented `key = value` config parser with `[section]` headers.

One grammar serves both run configs and plugin manifests: blank lines and
`#` comments (full-line or trailing) are ignored; every other line is either
a section header or a key/value pair.  Errors carry the line number.
"""

from .errors import ConfigError


class Section:
    def __init__(self, name, line):
        self.name = name
        self.line = line
        self.pairs = []  # (key, value, line)

    def to_dict(self):
        out = {}
        for key, value, line in self.pairs:
            if key in out:
                raise ConfigError("duplicate key '%s' in [%s]" % (key, self.name),
                                  line=line)
            out[key] = value
        return out


def parse_text(text):
    """Parse config text into an ordered list of Sections."""
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", line=lineno)
            name = line[1:-1].strip()
            if not name:
                raise ConfigError("empty section name", line=lineno)
            current = Section(name, lineno)
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value', got %r" % line, line=lineno)
        if current is None:
            raise ConfigError("key/value pair before any [section]", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("empty key", line=lineno)
        current.pairs.append((key, value, lineno))
    return sections


def parse_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read())


def get_float(d, key, default=None, context=""):
    if key not in d:
        if default is None:
            raise ConfigError("missing key '%s'%s" % (key, context))
        return default
    try:
        return float(d[key])
    except ValueError:
        raise ConfigError("key '%s' is not a number: %r" % (key, d[key])) from None


def get_int(d, key, default=None, context=""):
    if key not in d:
        if default is None:
            raise ConfigError("missing key '%s'%s" % (key, context))
        return default
    try:
        return int(d[key])
    except ValueError:
        raise ConfigError("key '%s' is not an integer: %r" % (key, d[key])) from None


def get_bool(d, key, default=None):
    if key not in d:
        if default is None:
            raise ConfigError("missing key '%s'" % key)
        return default
    value = d[key].lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ConfigError("key '%s' is not a boolean: %r" % (key, d[key]))
