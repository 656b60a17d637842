# lunarnet/utils/atomic.py
import os
import tempfile
from typing import Union

import aiofiles


async def write_atomic(path: str, content: Union[str, bytes]) -> str:
    """Write through a temp file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    os.close(fd)
    kwargs = {"mode": "wb"} if isinstance(content, bytes) else {"mode": "w", "encoding": "utf-8"}
    try:
        async with aiofiles.open(tmp, **kwargs) as f:
            await f.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path
