from typing import TypedDict

from .base import AttentionModeLiteral


class ArrayEntryPayload(TypedDict):
    name: str
    shape: list[int]
    offset: int  # in float64 elements


class ParamDescriptorPayload(TypedDict):
    dtype: str
    byteorder: str
    d: int
    mode: AttentionModeLiteral
    eps: float
    arrays: list[ArrayEntryPayload]
