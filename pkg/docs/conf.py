# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.

# -- Path setup --------------------------------------------------------------

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

from fieldoscopysim import __version__

# -- Project information -----------------------------------------------------

project = 'fieldoscopysim'
copyright = '2026, Tristan Kuehn'
author = 'Tristan Kuehn'

version = '.'.join(__version__.split('.')[:2])
release = __version__

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax'
]

autodoc_member_order = 'bysource'
napoleon_numpy_docstring = True
napoleon_google_docstring = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = None

# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = []
htmlhelp_basename = 'fieldoscopysimdoc'

# -- Options for LaTeX output ------------------------------------------------

latex_elements = {}
latex_documents = [
    (master_doc, 'fieldoscopysim.tex', 'fieldoscopysim Documentation',
     'Tristan Kuehn', 'manual'),
]

# -- Options for manual page output ------------------------------------------

man_pages = [
    (master_doc, 'fieldoscopysim', 'fieldoscopysim Documentation',
     [author], 1)
]
