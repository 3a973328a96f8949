import io
import logging
from .errors import UsageError

logger = logging.getLogger(__name__)

def parse_config_text(text, source='<config>'):
    """
    Parses "key = value" lines. Blank lines and lines starting with #
    are ignored, as are trailing "# ..." comments.
    Returns a list of (lineno, key, value) tuples.
    """
    entries = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split('=', 1)
        key = key.strip().replace('-', '_')
        if not key:
            raise UsageError(f"{source}:{lineno}: empty key")
        entries.append((lineno, key, value.strip()))
    return entries

class RunConfig(object):
    """
    The parameters of one command invocation. Values are layered:
    declared defaults, then a config file, then explicit command line flags.
    """
    def __init__(self, params):
        self.params = {}
        for param in params:
            self.add_param(param)

    def __getitem__(self, name):
        return self.params[name].value()

    def __contains__(self, name):
        return name in self.params

    def add_param(self, param):
        self.params[param.name] = param
        return param

    def get(self, name, default=None):
        param = self.params.get(name)
        if param is None or param.value() is None:
            return default
        return param.value()

    def set(self, name, value):
        try:
            param = self.params[name]
        except KeyError:
            raise UsageError(f"unknown parameter {name!r}")
        param.set(value)

    def load_text(self, text, source='<config>'):
        for lineno, key, value in parse_config_text(text, source):
            if key not in self.params:
                raise UsageError(f"{source}:{lineno}: unknown parameter {key!r}")
            self.params[key].set(value)
            logger.debug("%s: %s = %s", source, key, value)

    def load_file(self, filename):
        with open(filename, encoding='utf-8') as fp:
            self.load_text(fp.read(), source=filename)

    def update_from_args(self, args):
        # argparse defaults are None, so only flags given explicitly
        # override the config file.
        for name, param in self.params.items():
            value = getattr(args, name, None)
            if value is not None:
                param.set(value)

    def validate(self):
        for param in self.params.values():
            param.validate()

    def dump(self):
        return ''.join(f"{name} = {param.format()}\n"
                       for name, param in sorted(self.params.items())
                       if param.value() is not None)
