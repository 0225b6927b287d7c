#!/usr/bin/python
# -*- coding: utf-8 -*-
"""Entry point of ``python -m sfrac``"""

import sys

from .cli import main

sys.exit(main())
