from typing import TypeVar

import pydantic


class Base(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(
        extra='forbid'
    )


class ArrayBase(Base):
    model_config = pydantic.ConfigDict(
        extra='forbid',
        frozen=True,
        arbitrary_types_allowed=True
    )


BaseSubclass = TypeVar("BaseSubclass", bound=Base)
