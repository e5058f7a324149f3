"""
Services package

Stateful orchestration on top of the pipelines:
- cache_service: RCWA disk cache and in-process memo
- scan_service: parameter scans over run configurations
- optimizer_service: exhaustive geometry searches

Caches are shared process-wide and safe to use from worker threads.
Import the modules directly; the pipelines import cache_service themselves.
"""
