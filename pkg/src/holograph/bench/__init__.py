# -*- coding: utf-8 -*-
"""Benchmark harness: ground truths, metrics, experiments and reports."""
