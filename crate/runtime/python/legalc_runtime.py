"""Runtime support for programs transpiled by legalc.

Two exception classes stand for the empty and conflict errors of the default
calculus. Money, dates and durations are exact integers. Rendering matches the
reference interpreter byte for byte.
"""

import datetime
import sys

__version__ = "0.1.0"

I64_MIN = -(2 ** 63)
I64_MAX = 2 ** 63 - 1
_EPOCH = datetime.date(1970, 1, 1).toordinal()


class LegalcError(Exception):
    title = "Runtime error"

    def __init__(self, message=None):
        super().__init__(message)
        self.message = message

    def render(self):
        return self.message if self.message is not None else self.title


class Empty(LegalcError):
    title = "No definition applies"

    def __init__(self, message=None, kind="no_definition"):
        super().__init__(message)
        self.kind = kind


class Conflict(LegalcError):
    title = "Conflicting definitions apply at the same time"
    kind = "conflict"


class ArithmeticFault(LegalcError):
    title = "Arithmetic error"
    kind = "arithmetic"

    def render(self):
        return self.title


def raise_empty(kind="no_definition", message=None):
    raise Empty(message, kind)


def raise_conflict(message=None):
    raise Conflict(message)


def i64(n):
    if n < I64_MIN or n > I64_MAX:
        raise ArithmeticFault("integer overflow")
    return n


def div(x, y):
    if y == 0:
        raise ArithmeticFault("division by zero")
    q = abs(x) // abs(y)
    return i64(q if (x < 0) == (y < 0) else -q)


class Money:
    __slots__ = ("cents",)

    def __init__(self, cents):
        self.cents = i64(cents)

    def __add__(self, o):
        return Money(self.cents + o.cents)

    def __sub__(self, o):
        return Money(self.cents - o.cents)

    def __mul__(self, k):
        return Money(self.cents * k)

    def __neg__(self):
        return Money(-self.cents)

    def __eq__(self, o):
        return isinstance(o, Money) and self.cents == o.cents

    def __hash__(self):
        return hash(("money", self.cents))

    def __lt__(self, o):
        return self.cents < o.cents

    def __le__(self, o):
        return self.cents <= o.cents

    def __gt__(self, o):
        return self.cents > o.cents

    def __ge__(self, o):
        return self.cents >= o.cents

    def __str__(self):
        a = abs(self.cents)
        return "{}${:,}.{:02}".format("-" if self.cents < 0 else "", a // 100, a % 100)

    __repr__ = __str__


def div_money(m, k):
    return Money(div(m.cents, k))


class Duration:
    __slots__ = ("days",)

    def __init__(self, days):
        self.days = i64(days)

    def __add__(self, o):
        return Duration(self.days + o.days)

    def __sub__(self, o):
        return Duration(self.days - o.days)

    def __mul__(self, k):
        return Duration(self.days * k)

    def __neg__(self):
        return Duration(-self.days)

    def __eq__(self, o):
        return isinstance(o, Duration) and self.days == o.days

    def __hash__(self):
        return hash(("duration", self.days))

    def __lt__(self, o):
        return self.days < o.days

    def __le__(self, o):
        return self.days <= o.days

    def __gt__(self, o):
        return self.days > o.days

    def __ge__(self, o):
        return self.days >= o.days

    def __str__(self):
        return "{} day".format(self.days)

    __repr__ = __str__


class Date:
    """Proleptic Gregorian date, stored as days since 1970-01-01."""

    __slots__ = ("day",)

    def __init__(self, y, m, d):
        self.day = datetime.date(y, m, d).toordinal() - _EPOCH

    @staticmethod
    def of_day(n):
        r = Date.__new__(Date)
        r.day = i64(n)
        return r

    def __add__(self, n):
        return Date.of_day(self.day + n.days)

    def __sub__(self, o):
        if isinstance(o, Date):
            return Duration(self.day - o.day)
        return Date.of_day(self.day - o.days)

    def __eq__(self, o):
        return isinstance(o, Date) and self.day == o.day

    def __hash__(self):
        return hash(("date", self.day))

    def __lt__(self, o):
        return self.day < o.day

    def __le__(self, o):
        return self.day <= o.day

    def __gt__(self, o):
        return self.day > o.day

    def __ge__(self, o):
        return self.day >= o.day

    def __str__(self):
        try:
            d = datetime.date.fromordinal(self.day + _EPOCH)
        except (ValueError, OverflowError):
            raise ArithmeticFault("date out of range")
        return "{:04}-{:02}-{:02}".format(d.year, d.month, d.day)

    __repr__ = __str__


class Struct:
    """Base of generated structure classes. `_fields` lists
    (source name, attribute) pairs in declaration order."""

    __slots__ = ()
    _name = ""
    _fields = ()

    def __init__(self, **kw):
        for attr, v in kw.items():
            setattr(self, attr, v)

    def __eq__(self, o):
        return type(o) is type(self) and all(getattr(self, a) == getattr(o, a) for _, a in self._fields)

    def __hash__(self):
        return hash(tuple(getattr(self, a) for _, a in self._fields))

    def __str__(self):
        return render(self)


class Enum:
    __slots__ = ("ctor", "payload")
    _name = ""

    def __init__(self, ctor, payload=()):
        self.ctor = ctor
        self.payload = payload

    def __eq__(self, o):
        return type(o) is type(self) and self.ctor == o.ctor and self.payload == o.payload

    def __hash__(self):
        return hash((self.ctor, self.payload))

    def __str__(self):
        return render(self)


class Some:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __eq__(self, o):
        return isinstance(o, Some) and self.value == o.value


def process_exceptions(thunks, variable=None):
    """Left fold over the exception thunks: the first value is kept, a
    second one raises Conflict, Empty is skipped."""
    acc = None
    for t in thunks:
        try:
            v = t()
        except Empty:
            continue
        if acc is not None:
            raise Conflict(
                None if variable is None else "conflicting definitions of {} apply at the same time".format(variable)
            )
        acc = Some(v)
    return acc


def fold_left(f, acc, items):
    for x in items:
        acc = f(acc)(x)
    return acc


def render(v):
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(render(x) for x in v) + ")"
    if isinstance(v, list):
        return "[" + "; ".join(render(x) for x in v) + "]"
    if isinstance(v, Struct):
        return v._name + " {" + "".join(" -- {}: {}".format(n, render(getattr(v, a))) for n, a in v._fields) + " }"
    if isinstance(v, Enum):
        if v.payload == ():
            return v.ctor
        return "{} ({})".format(v.ctor, render(v.payload))
    if isinstance(v, Some):
        return "Some ({})".format(render(v.value))
    if v is None:
        return "None"
    if callable(v):
        return "<function>"
    return str(v)


def run_main(scope, names, compute):
    """Prints every local of `scope` as `Scope.var = value`, or the error
    title on standard error with exit status 1."""
    try:
        result = compute()
        lines = ["{}.{} = {}".format(scope, n, render(v)) for n, v in zip(names, result)]
    except LegalcError as e:
        sys.stderr.write("[ERROR] {}\n".format(e.render()))
        sys.exit(1)
    sys.stdout.write("".join(line + "\n" for line in lines))
