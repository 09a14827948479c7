"""Defined-contribution pension asset allocation under a four-factor market."""

from __future__ import annotations
