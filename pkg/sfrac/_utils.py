#!/usr/bin/python
# -*- coding: utf-8 -*-
# pylint: disable=invalid-name, too-few-public-methods

"""
Miscelaneous internal utilities. This module include:

    * :class:`_Report`: Base class for results calculated from keyword
      inputs, with status and message
    * :class:`Verdict`: Pass/fail/inconclusive outcome with margin
    * :func:`check_finite`: Reject arrays with NaN or infinite entries
    * :func:`loglog_slope`: Least squares slope in log-log scale
    * :func:`config_hash`: SHA-256 of a canonical JSON document
    * :func:`versions`: Versions of the numerical stack
    * :class:`Stopwatch`: Per-stage wall clock timings
    * :func:`thread_count`: Worker count from the environment
    * :func:`ordered_map`: Map over independent tasks, results in input order
"""

from __future__ import division
from concurrent.futures import ThreadPoolExecutor
import hashlib
import json
import os
import platform
import time

import numpy as np
import scipy


THREADS_ENV = "SFRAC_THREADS"


class _Report(object):
    """
    Base class for objects calculated from keyword inputs

    Subclasses define the class attribute `kwargs` with the default inputs
    and `required` with the keys that must be set before calculating. The
    instance is callable to add input parameters one to one.
    """

    kwargs = {}
    required = ()
    status = 0
    msg = "Undefined"

    def __init__(self, **kwargs):
        """Constructor, initinialice kwargs"""
        self.kwargs = self.__class__.kwargs.copy()
        self.__call__(**kwargs)

    def __call__(self, **kwargs):
        """Make instance callable to can add input parameter one to one"""
        unknown = set(kwargs) - set(self.kwargs)
        if unknown:
            raise ValueError("Unknown input parameters: %s" %
                             ", ".join(sorted(unknown)))
        self.kwargs.update(kwargs)

        if self.calculable:
            self.status = 1
            self.calculo()
            self.msg = ""

    @property
    def calculable(self):
        """Check if inputs are enough to calculate"""
        return all(self.kwargs[key] is not None for key in self.required)

    def calculo(self):
        """Calculate procedure"""
        raise NotImplementedError


class Verdict(object):
    """
    Outcome of a condition check

    Parameters
    ----------
    status : str
        One of ``pass``, ``fail``, ``inconclusive``
    margin : float
        Signed margin of the tested strict inequality
    constant : float, optional
        Constant emitted by the check when it passes
    detail : str
        Human readable reason
    """

    def __init__(self, status, margin=None, constant=None, detail=""):
        if status not in ("pass", "fail", "inconclusive"):
            raise ValueError("status must be one of pass, fail, inconclusive")
        self.status = status
        self.margin = margin
        self.constant = constant
        self.detail = detail

    @property
    def passed(self):
        return self.status == "pass"

    def __bool__(self):
        return self.passed

    __nonzero__ = __bool__

    def as_dict(self):
        return {"status": self.status, "margin": _jsonable(self.margin),
                "constant": _jsonable(self.constant), "detail": self.detail}

    def __repr__(self):
        return "Verdict(%r, margin=%r)" % (self.status, self.margin)


def _jsonable(x):
    """Replace non-finite floats by None for strict JSON output"""
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def check_finite(values, what="values"):
    """Raise ValueError with the first offending index of a non-finite entry

    Parameters
    ----------
    values : array_like
        Array to check
    what : str
        Name used in the error message

    Returns
    -------
    values : numpy.ndarray
        The input as a float array
    """
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        index = np.argwhere(bad)[0]
        raise ValueError("Non-finite entry in %s at index %s" %
                         (what, tuple(int(i) for i in index)))
    return values


def loglog_slope(x, y):
    """Slope of the least squares line through (log x, log y)

    Parameters
    ----------
    x, y : array_like
        Positive samples

    Returns
    -------
    slope : float
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if np.count_nonzero(keep) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def config_hash(document):
    """SHA-256 hex digest of a JSON-serializable document

    Keys are sorted and separators fixed so equal documents hash equally.
    """
    text = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def versions():
    """Versions of the interpreter and the numerical stack"""
    from . import __version__
    return {"sfrac": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version()}


class Stopwatch(object):
    """Record wall clock timings of named stages"""

    def __init__(self):
        self.timings = {}
        self._start = {}

    def begin(self, stage):
        self._start[stage] = time.perf_counter()

    def end(self, stage):
        self.timings[stage] = time.perf_counter() - self._start.pop(stage)
        return self.timings[stage]


def thread_count(override=None):
    """Number of worker threads

    Parameters
    ----------
    override : int, optional
        Explicit value, usually from a command line flag

    Returns
    -------
    n : int
        override if given, else the SFRAC_THREADS environment variable,
        else 1
    """
    if override is not None:
        n = int(override)
    else:
        n = int(os.environ.get(THREADS_ENV, "1") or 1)
    if n < 1:
        raise ValueError("Thread count must be positive")
    return n


def ordered_map(func, items, threads=None):
    """Apply func to every item, results in the order of items"""
    items = list(items)
    threads = thread_count(threads)
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
