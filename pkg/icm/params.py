import re
from .errors import UsageError

label_re = re.compile(r'[-_]+')
true_words = {'1', 'true', 'yes', 'on'}
false_words = {'0', 'false', 'no', 'off'}

class Param(object):
    """
    A named, typed run parameter. Values may be assigned as text (from a
    config file or the command line) or as native Python values.
    """
    type = str
    choices = None

    def __init__(self, name, default=None, help='', required=False, choices=None):
        self.name = name
        self.label = label_re.sub(' ', name).strip().capitalize()
        self.default = default
        self.help = help
        self.required = required
        self.choices = self.choices if choices is None else choices
        self.v = default

    def __str__(self):
        return self.format()

    def parse(self, text):
        return self.type(text.strip())

    def set(self, value):
        if isinstance(value, str) and self.type is not str:
            try:
                value = self.parse(value)
            except ValueError:
                raise UsageError(f"{self.name}: cannot parse {value!r}")
        self.v = value

    def value(self):
        return self.v

    def format(self):
        return '' if self.v is None else str(self.v)

    def flag(self):
        return '--'+self.name.replace('_', '-')

    def validate(self):
        if self.v is None:
            if self.required:
                raise UsageError(f"missing required parameter {self.flag()}")
            return
        if not isinstance(self.v, self.type):
            raise UsageError(f"{self.name} must be of type {self.type.__name__}, got {self.v!r}")
        if self.choices is not None and self.v not in self.choices:
            choices = ', '.join(str(c) for c in self.choices)
            raise UsageError(f"{self.name} must be one of {choices}, got {self.v!r}")

    def to_dict(self):
        return {
            'objtype': self.__class__.__name__,
            'label': self.label,
            'name': self.name,
            'type': self.type.__name__,
            'default': self.default,
            'choices': self.choices,
        }

class PathParam(Param):
    type = str

class BoolParam(Param):
    type = bool

    def parse(self, text):
        word = text.strip().lower()
        if word in true_words:
            return True
        if word in false_words:
            return False
        raise ValueError(text)

    def format(self):
        return '' if self.v is None else str(self.v).lower()

class NumericParam(Param):
    """
    A number with optional bounds. open_min excludes the lower bound,
    as needed for things like learning rates and strengths.
    """
    def __init__(self,
                 name,
                 default=None,
                 min=None,
                 max=None,
                 open_min=False,
                 help='',
                 required=False):
        super(NumericParam, self).__init__(name, default=default, help=help, required=required)
        self.min = min
        self.max = max
        self.open_min = open_min

    def check_bounds(self, v):
        if self.min is not None:
            if v < self.min or (self.open_min and v == self.min):
                op = '>' if self.open_min else '>='
                raise UsageError(f"{self.name} must be {op} {self.min}, got {v}")
        if self.max is not None and v > self.max:
            raise UsageError(f"{self.name} must be <= {self.max}, got {v}")

    def validate(self):
        super(NumericParam, self).validate()
        if self.v is not None:
            self.check_bounds(self.v)

class IntParam(NumericParam):
    type = int

    def set(self, value):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        super(IntParam, self).set(value)

class FloatParam(NumericParam):
    type = float

    def set(self, value):
        if isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        super(FloatParam, self).set(value)

    def format(self):
        return '' if self.v is None else repr(self.v)

class ListParam(NumericParam):
    """
    A comma separated list of numbers, e.g. "0.3, 0.3, 0.3" or "64,64".
    Bounds apply to each element.
    """
    type = list

    def __init__(self, name, item_type=float, length=None, **kwargs):
        super(ListParam, self).__init__(name, **kwargs)
        self.item_type = item_type
        self.length = length

    def parse(self, text):
        items = [t for t in text.replace(' ', '').split(',') if t]
        return [self.item_type(t) for t in items]

    def set(self, value):
        if isinstance(value, (tuple, int, float)) and not isinstance(value, bool):
            value = list(value) if isinstance(value, tuple) else [value]
        super(ListParam, self).set(value)

    def format(self):
        return '' if self.v is None else ','.join(str(x) for x in self.v)

    def validate(self):
        Param.validate(self)
        if self.v is None:
            return
        if not self.v:
            raise UsageError(f"{self.name} must not be empty")
        if self.length is not None and len(self.v) != self.length:
            raise UsageError(f"{self.name} needs {self.length} values, got {len(self.v)}")
        for item in self.v:
            self.check_bounds(item)

type_map = {
   bool: BoolParam,
   int: IntParam,
   float: FloatParam,
   str: Param,
   list: ListParam,
}
