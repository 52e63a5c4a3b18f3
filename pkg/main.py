#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : main.py
@Author  : Sun
@Email   :
@Date    : 2025-09-12
@Desc    : 命令行入口，例如 python main.py train --config config/config.ini --override policy_lr=0
"""

import sys

from dotenv import load_dotenv

from src.cli.dispatcher import main

if __name__ == "__main__":
    # .env 中可设置 CRLTAC_DATA_DIR
    load_dotenv()
    sys.exit(main())
