from typing import Literal, NotRequired, TypedDict


class GridHeaderPayload(TypedDict):
    rows: int
    cols: int
    post_spacing_m: float
    nodata: float | None
    origin: Literal["center"]
    dtype: NotRequired[Literal["<f4", "<u2", "u1"]]
    maxval: NotRequired[int]
