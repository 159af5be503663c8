"""Data layer: serializers, blocks and files, the memory-capped block
pool, and all-to-all streams."""

from thrillette.data import serial
from thrillette.data.block import BlockWriter, File, FileReader
from thrillette.data.pool import DEFAULT_BLOCK_SIZE, Block, BlockPool, Pin
from thrillette.data.stream import CatStream, MixStream, Stream

__all__ = [
    "Block",
    "BlockPool",
    "BlockWriter",
    "CatStream",
    "DEFAULT_BLOCK_SIZE",
    "File",
    "FileReader",
    "MixStream",
    "Pin",
    "Stream",
    "serial",
]
