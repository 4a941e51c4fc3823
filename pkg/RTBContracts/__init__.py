# Copyright (c) 2026 RTBContracts contributors. All rights reserved.
__appname__ = "RTBContracts"
__version__ = "0.3.0"
