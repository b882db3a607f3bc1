#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# gyrocal documentation build configuration file.

import os
import sys

# Project root first on path so that the source package and its version are
# documented.
sys.path.insert(0, os.path.dirname(os.getcwd()))

import gyrocal  # noqa: E402

# -- General configuration ---------------------------------------------

extensions = ["sphinx.ext.autodoc", "sphinx.ext.intersphinx", "sphinx.ext.viewcode"]

templates_path = ["_templates"]

source_suffix = ".rst"

master_doc = "index"

project = u"gyrocal - MEMS gyroscope bias estimation"
copyright = u"2026, gyrocal developers"

version = gyrocal.__version__
release = gyrocal.__version__

exclude_patterns = ["_build"]

pygments_style = "sphinx"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
}

# -- Options for HTML output -------------------------------------------

html_theme = "default"

html_static_path = ["_static"]

htmlhelp_basename = "gyrocaldoc"

# -- Options for LaTeX output ------------------------------------------

latex_documents = [
    (
        "index",
        "gyrocal.tex",
        u"gyrocal Documentation",
        u"gyrocal developers",
        "manual",
    )
]

# -- Options for manual page output ------------------------------------

man_pages = [
    ("index", "gyrocal", u"gyrocal Documentation", [u"gyrocal developers"], 1)
]
