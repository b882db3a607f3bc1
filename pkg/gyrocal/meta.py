# -*- coding: utf-8 -*-

"""
gyrocal.meta
~~~~~~~~~~~~

Sidecar metadata stored next to signal files, checkpoints and reports

A sidecar has the same basename as the file it describes and ``.meta``
suffix. It contains key-value lines, parsed as YAML.
"""

import os
from collections.abc import Mapping

import yaml

from gyrocal.exceptions import FormatError

#: Suffix of sidecar files
META_SUFFIX = ".meta"


def sidecar_path(path):
    """Returns path of sidecar that belongs to `path`"""
    base, _ = os.path.splitext(str(path))
    return base + META_SUFFIX


class Metadata(Mapping):
    """
    The :class:`Metadata <Metadata>` object, which contains key-value pairs
    of a sidecar file.

    Content is read lazily on first access.

    :param str path: path to sidecar file. Can be later set as an attribute.
    """

    def __init__(self, path=None):
        self.path = path

        self._data = False

    @property
    def data(self):
        """
        Sidecar content as dict
        """
        if self._data is False:
            if self.path is None:
                raise RuntimeError("No path to read metadata from")
            try:
                with open(self.path) as fileobj:
                    loaded = yaml.safe_load(fileobj)
            except yaml.YAMLError as err:
                msg = "Failed to parse metadata {path}: {err}".format(
                    path=self.path, err=err
                )
                raise FormatError(msg)
            if loaded is None:
                loaded = {}
            if not isinstance(loaded, dict):
                msg = "Metadata {path} is not a key-value document".format(
                    path=self.path
                )
                raise FormatError(msg)
            self._data = loaded
        return self._data

    def raise_for_keys(self, *keys):
        """
        Raises :py:exc:`~.exceptions.FormatError` if any key is missing

        :rtype: None
        """
        missing = [key for key in keys if key not in self.data]
        if missing:
            msg = "Metadata {path} misses keys: {missing}".format(
                path=self.path, missing=", ".join(missing)
            )
            raise FormatError(msg)

    def __getitem__(self, key):
        return self.data[key]

    def __iter__(self):
        return iter(self.data)

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        return "<{class_name} [{path}]>".format(
            class_name=self.__class__.__name__, path=self.path
        )


def read_metadata(path):
    """
    Reads sidecar of a file

    :param str path: path of the described file or of the sidecar itself
    :rtype: :class:`Metadata`
    """
    if not str(path).endswith(META_SUFFIX):
        path = sidecar_path(path)
    if not os.path.exists(path):
        raise FormatError("Metadata file {path} doesn't exist".format(path=path))
    return Metadata(path)


def write_metadata(path, mapping):
    """
    Writes sidecar next to `path`

    Keys are sorted so equal content gives byte-identical files.

    :return: path of written sidecar
    :rtype: str
    """
    if not str(path).endswith(META_SUFFIX):
        path = sidecar_path(path)
    with open(path, "w") as fileobj:
        yaml.safe_dump(dict(mapping), fileobj, default_flow_style=None, sort_keys=True)
    return path
