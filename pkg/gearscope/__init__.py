#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
from gearscope.core.utils.constants import CLIENT_VERSION as __version__
from .config import *
from .exceptions import *
from .ingest import *
from .features import *
from .cwt import *
from .detect import *
from .trend import *
from .plot import *
from .synthetic import *
from .pipeline import *
